use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::wellposedness_check;
use crate::linalg::{numerical_rank_relative, singular_values, DenseMatrix};
use crate::pattern::{off_diagonal, GenericBounds};
use crate::solvers::{lrma_fixed_rank, nuclear_norm_complete, rank_from_singular_values, ObservedMatrix, SolverConfig};
use crate::stats::degrees_of_freedom;

const OFF_DIAGONAL: [[f64; 6]; 6] = [
    [0.0, 0.56, 0.16, 0.48, 0.24, 0.64],
    [0.56, 0.0, 0.20, 0.66, 0.51, 0.86],
    [0.16, 0.20, 0.0, 0.18, 0.07, 0.23],
    [0.48, 0.66, 0.18, 0.0, 0.30, 0.72],
    [0.24, 0.51, 0.07, 0.30, 0.0, 0.41],
    [0.64, 0.86, 0.23, 0.72, 0.41, 0.0],
];

/// Diagonals of the two rank-3 completions as printed (two decimals).
pub const PRINTED_DIAGONALS: [[f64; 6]; 2] = [
    [0.64, 0.85, 0.06, 0.56, 0.50, 0.93],
    [0.42, 0.90, 0.06, 0.55, 0.39, 1.00],
];

/// Exact diagonals giving rank 3. The first equals the printed values; the
/// second is the nearby exact completion (within 0.006 of the print).
const EXACT_DIAGONALS: [[f64; 6]; 2] = [
    [0.64, 0.85, 0.06, 0.56, 0.50, 0.93],
    [86.4 / 203.0, 11.73 / 13.0, 3.11 / 49.0, 7.11 / 13.0, 1.16 / 3.0, 0.998],
];

/// Diagonal of the minimum nuclear norm completion as printed.
pub const PRINTED_NUCLEAR_DIAGONAL: [f64; 6] = [0.44, 0.76, 0.05, 0.53, 0.19, 0.96];

/// The symmetric 6 × 6 matrix with unknown diagonal and two distinct
/// locally unique rank-3 completions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilsonFixture {
    pub observed: ObservedMatrix,
    pub completions: [DenseMatrix; 2],
    pub printed_diagonals: [[f64; 6]; 2],
}

impl WilsonFixture {
    pub fn with_diagonal(&self, diag: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(6, 6, |i, j| if i == j { diag[i] } else { OFF_DIAGONAL[i][j] })
    }
}

pub fn wilson_fixture() -> WilsonFixture {
    let pattern = off_diagonal(6).expect("6x6 off-diagonal pattern");
    let values = pattern.entries().iter().map(|&(i, j)| OFF_DIAGONAL[i][j]).collect();
    let observed = ObservedMatrix::new(pattern, values).expect("finite fixture");
    let fill = |d: &[f64; 6]| DenseMatrix::from_fn(6, 6, |i, j| if i == j { d[i] } else { OFF_DIAGONAL[i][j] });
    WilsonFixture {
        observed,
        completions: [fill(&EXACT_DIAGONALS[0]), fill(&EXACT_DIAGONALS[1])],
        printed_diagonals: PRINTED_DIAGONALS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionCheck {
    pub diagonal: Vec<f64>,
    pub printed_diagonal: Vec<f64>,
    /// σ₄/σ₁ of the stored completion.
    pub sigma_ratio: f64,
    /// σ₄/σ₁ with the printed two-decimal diagonal.
    pub printed_sigma_ratio: f64,
    pub well_posed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilsonReport {
    pub m: usize,
    pub r_value: f64,
    pub r_ceil: usize,
    pub df_rank3: i64,
    pub completions: Vec<CompletionCheck>,
    pub nuclear_diagonal: Vec<f64>,
    pub nuclear_printed_diagonal: Vec<f64>,
    pub nuclear_singular_values: Vec<f64>,
    pub nuclear_threshold: f64,
    pub nuclear_threshold_rank: usize,
    pub nuclear_rank_tol: f64,
    pub nuclear_numerical_rank: usize,
    pub nuclear_converged: bool,
    pub nuclear_tol: f64,
    /// Rank-3 least squares from the zero-filled start.
    pub lrma_diagonal: Vec<f64>,
    pub lrma_fit: f64,
    pub lrma_converged: bool,
    pub lrma_tol: f64,
}

fn sigma_ratio(y: &DenseMatrix) -> Result<f64> {
    let sv = singular_values(y)?;
    Ok(sv[3] / sv[0])
}

/// Certifies both rank-3 completions and runs nuclear-norm minimization and
/// rank-3 least squares on the fixture.
pub fn wilson_reproduction() -> Result<WilsonReport> {
    let fx = wilson_fixture();
    let p = &fx.observed.pattern;
    let bounds = GenericBounds::new(6, 6, p.m());
    let mut completions = Vec::new();
    for (y, printed) in fx.completions.iter().zip(&fx.printed_diagonals) {
        completions.push(CompletionCheck {
            diagonal: (0..6).map(|i| y[(i, i)]).collect(),
            printed_diagonal: printed.to_vec(),
            sigma_ratio: sigma_ratio(y)?,
            printed_sigma_ratio: sigma_ratio(&fx.with_diagonal(printed))?,
            well_posed: wellposedness_check(y, 3, p, 0.0)?.well_posed,
        });
    }
    let nuclear_tol = 1e-9;
    let nuc = nuclear_norm_complete(&fx.observed, &SolverConfig::default().with_tol(nuclear_tol).with_max_iter(50_000))?;
    let threshold = 0.999;
    let rank_tol = 1e-4;
    let lrma_tol = 1e-12;
    let lrma = lrma_fixed_rank(&fx.observed, 3, &SolverConfig::default().with_tol(lrma_tol).with_max_iter(50_000))?;
    Ok(WilsonReport {
        m: p.m(),
        r_value: bounds.r_value,
        r_ceil: bounds.r_ceil,
        df_rank3: degrees_of_freedom(3, 6, 6, p.m()),
        completions,
        nuclear_diagonal: (0..6).map(|i| nuc.y_hat[(i, i)]).collect(),
        nuclear_printed_diagonal: PRINTED_NUCLEAR_DIAGONAL.to_vec(),
        nuclear_singular_values: singular_values(&nuc.y_hat)?,
        nuclear_threshold: threshold,
        nuclear_threshold_rank: rank_from_singular_values(&nuc.y_hat, threshold)?,
        nuclear_rank_tol: rank_tol,
        nuclear_numerical_rank: numerical_rank_relative(&nuc.y_hat, rank_tol)?,
        nuclear_converged: nuc.converged,
        nuclear_tol,
        lrma_diagonal: (0..6).map(|i| lrma.y_hat[(i, i)]).collect(),
        lrma_fit: lrma.fit,
        lrma_converged: lrma.converged,
        lrma_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::complements;
    use crate::solvers::lrma_fixed_rank;

    #[test]
    fn fixture_shape() {
        let fx = wilson_fixture();
        assert_eq!(fx.observed.pattern.m(), 30);
        for y in &fx.completions {
            assert_eq!(*y, y.transpose());
            for (&(i, j), &v) in fx.observed.pattern.entries().iter().zip(&fx.observed.values) {
                assert_eq!(y[(i, j)], v);
            }
        }
        assert_eq!((0..6).map(|i| fx.completions[0][(i, i)]).collect::<Vec<_>>(), PRINTED_DIAGONALS[0]);
        for (i, printed) in PRINTED_DIAGONALS[1].iter().enumerate() {
            assert!((fx.completions[1][(i, i)] - printed).abs() < 0.006);
        }
    }

    #[test]
    fn completions_rank_three_and_complements() {
        let fx = wilson_fixture();
        for y in &fx.completions {
            assert!(sigma_ratio(y).unwrap() < 1e-6);
            let c = complements(y, 3, 1e-6).unwrap();
            assert_eq!(c.f.shape(), (3, 6));
            assert_eq!(c.g.shape(), (6, 3));
            let s1 = c.singular_values[0];
            assert!(c.f.matmul(y).frobenius_norm() < 1e-8 * s1);
            assert!(y.matmul(&c.g).frobenius_norm() < 1e-8 * s1);
        }
    }

    #[test]
    fn warm_start_reaches_second_completion() {
        let fx = wilson_fixture();
        let start = fx.with_diagonal(&PRINTED_DIAGONALS[1]);
        let cfg = SolverConfig::default().with_tol(1e-15).with_max_iter(100_000).with_init(start);
        let res = lrma_fixed_rank(&fx.observed, 3, &cfg).unwrap();
        assert!(res.fit < 1e-20, "{}", res.fit);
        assert!(res.y_hat.sub(&fx.completions[1]).max_abs() < 1e-6);
    }
}
