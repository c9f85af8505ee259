//! Completion algorithms: fixed-rank least squares, exact rank-one
//! propagation, Schur-complement cascades and nuclear-norm minimization.

mod lrma;
mod nuclear;
mod rank_one;
mod schur;

pub use lrma::lrma_fixed_rank;
pub use nuclear::{nuclear_norm_complete, nuclear_norm_complete_with, NuclearAlgorithm, NuclearOptions};
pub use rank_one::rank_one_complete;
pub use schur::{schur_cascade, schur_complete_entry, CascadeResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, DenseMatrix};
use crate::pattern::ObservationPattern;

/// Observed entries of a partially known matrix, in the order of
/// `pattern.entries()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedMatrix {
    pub pattern: ObservationPattern,
    pub values: Vec<f64>,
}

impl ObservedMatrix {
    pub fn new(pattern: ObservationPattern, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.m() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} observed entries",
                values.len(),
                pattern.m()
            )));
        }
        for (&(row, col), &value) in pattern.entries().iter().zip(&values) {
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col, value });
            }
        }
        Ok(ObservedMatrix { pattern, values })
    }

    /// Samples `y` on the pattern.
    pub fn from_dense(pattern: ObservationPattern, y: &DenseMatrix) -> Result<Self> {
        if y.shape() != (pattern.n1(), pattern.n2()) {
            return Err(Error::DimensionMismatch("matrix does not match pattern grid".into()));
        }
        let values = pattern.entries().iter().map(|&(i, j)| y[(i, j)]).collect();
        Self::new(pattern, values)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.pattern.n1(), self.pattern.n2())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.pattern.index_of(i, j).map(|k| self.values[k])
    }

    /// `P_Ω(M)` with zeros on the missing entries.
    pub fn zero_filled(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.pattern.n1(), self.pattern.n2());
        for (&(i, j), &v) in self.pattern.entries().iter().zip(&self.values) {
            out[(i, j)] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `Σ_Ω w_ij (M_ij − Y_ij)²`, unit weights when `weights` is `None`.
    pub fn weighted_fit(&self, y: &DenseMatrix, weights: Option<&[f64]>) -> f64 {
        self.pattern
            .entries()
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| {
                let w = weights.map_or(1.0, |w| w[k]);
                w * (self.values[k] - y[(i, j)]).powi(2)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when the relative Frobenius change between iterates drops below.
    pub tol: f64,
    pub max_iter: usize,
    /// Positive weight per observed entry; `None` means unit weights.
    pub weights: Option<Vec<f64>>,
    /// Seeds the random start when `random_init` is set.
    pub seed: u64,
    pub random_init: bool,
    /// Explicit starting point; overrides the zero-filled default.
    pub init: Option<DenseMatrix>,
    /// Record the objective after every iteration.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 50_000,
            weights: None,
            seed: 0,
            random_init: false,
            init: None,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_init(mut self, init: DenseMatrix) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_random_init(mut self, seed: u64) -> Self {
        self.random_init = true;
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self, m: &ObservedMatrix) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != m.pattern.m() {
                return Err(Error::DimensionMismatch(format!(
                    "{} weights for {} observed entries",
                    w.len(),
                    m.pattern.m()
                )));
            }
            if w.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
                return Err(Error::InvalidArgument("weights must be positive and finite".into()));
            }
        }
        if let Some(y0) = &self.init {
            if y0.shape() != m.shape() {
                return Err(Error::DimensionMismatch("initial point does not match the grid".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn uniform_weights(&self) -> bool {
        self.weights
            .as_ref()
            .is_none_or(|w| w.iter().all(|&x| x == w[0]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub y_hat: DenseMatrix,
    /// Objective at `y_hat`; see each solver for its definition.
    pub fit: f64,
    pub iterations: usize,
    pub converged: bool,
    pub optimality_residuals: (f64, f64),
    /// Objective per iteration when requested.
    pub history: Vec<f64>,
}

/// First-order stationarity residuals of the unweighted least-squares fit:
/// `(‖(P_Ω(Y) − M)ᵀ Y‖_F, ‖Y (P_Ω(Y) − M)ᵀ‖_F)`.
pub fn optimality_residual(y: &DenseMatrix, m: &ObservedMatrix) -> (f64, f64) {
    let mut resid = DenseMatrix::zeros(y.rows(), y.cols());
    for (&(i, j), &v) in m.pattern.entries().iter().zip(&m.values) {
        resid[(i, j)] = y[(i, j)] - v;
    }
    let left = resid.t_matmul(y).frobenius_norm();
    let right = y.matmul(&resid.transpose()).frobenius_norm();
    (left, right)
}

/// Smallest `r` whose leading singular values carry more than a fraction
/// `b` of the nuclear norm.
pub fn rank_from_singular_values(y: &DenseMatrix, b: f64) -> Result<usize> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {b} outside (0, 1)")));
    }
    Ok(rank_from_spectrum(&singular_values(y)?, b))
}

pub(crate) fn rank_from_spectrum(sv: &[f64], b: f64) -> usize {
    let total: f64 = sv.iter().sum();
    if total == 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (k, s) in sv.iter().enumerate() {
        acc += s;
        if acc / total > b {
            return k + 1;
        }
    }
    sv.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;

    #[test]
    fn observed_matrix_validation() {
        let p = ObservationPattern::full(2, 2).unwrap();
        assert!(ObservedMatrix::new(p.clone(), vec![1.0; 3]).is_err());
        assert!(matches!(
            ObservedMatrix::new(p.clone(), vec![1.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { row: 0, col: 1, .. })
        ));
        let m = ObservedMatrix::new(p, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.get(1, 0), Some(3.0));
        assert_eq!(m.zero_filled()[(1, 1)], 4.0);
    }

    #[test]
    fn threshold_rank_values() {
        assert_eq!(rank_from_spectrum(&[3.0, 2.0, 1.0], 0.5), 2);
        assert_eq!(rank_from_spectrum(&[1.0, 1.0, 1.0, 1.0], 0.7), 3);
        let y = DenseMatrix::from_fn(4, 3, |i, j| (i + 1) as f64 * (j as f64 - 0.5));
        for b in [0.1, 0.5, 0.99] {
            assert_eq!(rank_from_singular_values(&y, b).unwrap(), 1);
        }
        assert!(rank_from_singular_values(&y, 1.0).is_err());
    }

    #[test]
    fn residuals_vanish_on_exact_fit_and_truncation() {
        let y = DenseMatrix::from_fn(4, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let p = ObservationPattern::full(4, 5).unwrap();
        let m = ObservedMatrix::from_dense(p, &y).unwrap();
        assert_eq!(optimality_residual(&y, &m), (0.0, 0.0));
        let s = svd(&y).unwrap();
        let y2 = s.truncated(2);
        let (a, b) = optimality_residual(&y2, &m);
        let s1 = s.largest();
        assert!(a < 1e-9 * s1 * s1 && b < 1e-9 * s1 * s1, "{a} {b}");
    }
}
