use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DEFAULT_RANK_TOL;
use crate::error::{Error, Result};
use crate::linalg::{singular_values, DenseMatrix};
use crate::pattern::ObservationPattern;
use crate::random::{gaussian_matrix, substream};

/// Factor pair with `Y = V·Wᵀ`; `v` is n1 × r and `w` is n2 × r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankFactors {
    pub v: DenseMatrix,
    pub w: DenseMatrix,
}

impl LowRankFactors {
    pub fn new(v: DenseMatrix, w: DenseMatrix) -> Result<Self> {
        if v.cols() != w.cols() {
            return Err(Error::DimensionMismatch(format!(
                "factor widths differ: {} vs {}",
                v.cols(),
                w.cols()
            )));
        }
        Ok(LowRankFactors { v, w })
    }

    /// Independent standard normal factors.
    pub fn gaussian<R: rand::Rng + ?Sized>(n1: usize, n2: usize, r: usize, rng: &mut R) -> Self {
        let v = gaussian_matrix(n1, r, rng);
        let w = gaussian_matrix(n2, r, rng);
        LowRankFactors { v, w }
    }

    pub fn rank(&self) -> usize {
        self.v.cols()
    }

    pub fn product(&self) -> DenseMatrix {
        self.v.matmul(&self.w.transpose())
    }
}

/// Jacobian of `(V, W, X) ↦ VWᵀ + X` with `X` supported on Ω^c.
///
/// One row per parameter (V entries row-major, then W entries row-major,
/// then one row per missing position), one column per entry of the image in
/// column-major order. The matrix does not depend on `X`.
pub fn jacobian(f: &LowRankFactors, p: &ObservationPattern) -> Result<DenseMatrix> {
    let (n1, n2) = (p.n1(), p.n2());
    let r = f.rank();
    if f.v.rows() != n1 || f.w.rows() != n2 || f.w.cols() != r {
        return Err(Error::DimensionMismatch(format!(
            "factors {}x{} and {}x{} do not fit a {n1}x{n2} pattern",
            f.v.rows(),
            f.v.cols(),
            f.w.rows(),
            f.w.cols()
        )));
    }
    let missing = p.complement();
    let mut d = DenseMatrix::zeros(n1 * r + n2 * r + missing.len(), n1 * n2);
    for i in 0..n1 {
        for k in 0..r {
            let row = i * r + k;
            for j in 0..n2 {
                d[(row, i + j * n1)] = f.w[(j, k)];
            }
        }
    }
    let off = n1 * r;
    for j in 0..n2 {
        for k in 0..r {
            let row = off + j * r + k;
            for i in 0..n1 {
                d[(row, i + j * n1)] = f.v[(i, k)];
            }
        }
    }
    let off = off + n2 * r;
    for (t, &(i, j)) in missing.iter().enumerate() {
        d[(off + t, i + j * n1)] = 1.0;
    }
    Ok(d)
}

/// Rank of the Jacobian. The X rows are distinct unit vectors, so the rank
/// is `|Ω^c|` plus the rank of the factor block restricted to Ω columns.
fn jacobian_rank(f: &LowRankFactors, p: &ObservationPattern, tol: f64) -> Result<usize> {
    let (n1, n2) = (p.n1(), p.n2());
    let r = f.rank();
    let mut b = DenseMatrix::zeros((n1 + n2) * r, p.m());
    for (col, &(i, j)) in p.entries().iter().enumerate() {
        for k in 0..r {
            b[(i * r + k, col)] = f.w[(j, k)];
            b[(n1 * r + j * r + k, col)] = f.v[(i, k)];
        }
    }
    let sv = singular_values(&b)?;
    let s1 = sv.first().copied().unwrap_or(0.0);
    Ok(p.complement_len() + sv.iter().filter(|&&s| s > tol * s1).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharRankResult {
    pub rank: usize,
    /// Largest Jacobian rank observed.
    pub rho: usize,
    /// `r(n1 + n2 − r) + n1·n2 − m`, the upper bound on `rho`.
    pub f_rm: usize,
    pub trials: usize,
    pub ranks_per_trial: Vec<usize>,
    pub generic_well_posed: bool,
    pub seed: u64,
    pub tol_used: f64,
}

/// Estimates the characteristic rank of the parametrization at Gaussian
/// factor draws. Trial `t` uses substream `(seed, t)`.
pub fn characteristic_rank(
    p: &ObservationPattern,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<CharRankResult> {
    let (n1, n2) = (p.n1(), p.n2());
    if r == 0 || r > n1.min(n2) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} outside 1..={}",
            n1.min(n2)
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let tol = DEFAULT_RANK_TOL;
    let ranks_per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t as u64);
            let f = LowRankFactors::gaussian(n1, n2, r, &mut rng);
            jacobian_rank(&f, p, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let rho = ranks_per_trial.iter().copied().max().unwrap_or(0);
    let f_rm = p.bounds().f_rm(r);
    Ok(CharRankResult {
        rank: r,
        rho,
        f_rm,
        trials,
        ranks_per_trial,
        generic_well_posed: rho == f_rm,
        seed,
        tol_used: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank_relative;
    use crate::pattern::{block_diagonal, off_diagonal};

    fn image(f: &LowRankFactors, x: &DenseMatrix) -> Vec<f64> {
        f.product().add(x).vec()
    }

    #[test]
    fn finite_differences_match() {
        let p = off_diagonal(4).unwrap();
        let mut rng = substream(1, 0);
        let f = LowRankFactors::gaussian(4, 4, 2, &mut rng);
        let x = DenseMatrix::from_fn(4, 4, |i, j| if i == j { 0.3 * (i as f64 + 1.0) } else { 0.0 });
        let d = jacobian(&f, &p).unwrap();
        let base = image(&f, &x);
        let h = 1e-7;
        let mut row = 0;
        let check = |row: usize, bumped: Vec<f64>| {
            for (c, (a, b)) in bumped.iter().zip(&base).enumerate() {
                let fd = (a - b) / h;
                assert!((fd - d[(row, c)]).abs() < 1e-6, "row {row} col {c}: {fd} vs {}", d[(row, c)]);
            }
        };
        for i in 0..4 {
            for k in 0..2 {
                let mut g = f.clone();
                g.v[(i, k)] += h;
                check(row, image(&g, &x));
                row += 1;
            }
        }
        for j in 0..4 {
            for k in 0..2 {
                let mut g = f.clone();
                g.w[(j, k)] += h;
                check(row, image(&g, &x));
                row += 1;
            }
        }
        for &(i, j) in &p.complement() {
            let mut x2 = x.clone();
            x2[(i, j)] += h;
            check(row, image(&f, &x2));
            row += 1;
        }
        assert_eq!(row, d.rows());
    }

    #[test]
    fn two_by_two_unit_factors() {
        let p = ObservationPattern::full(2, 2).unwrap();
        let e = DenseMatrix::from_rows(&[&[1.0], &[0.0]]);
        let f = LowRankFactors::new(e.clone(), e).unwrap();
        let d = jacobian(&f, &p).unwrap();
        assert_eq!(d.shape(), (4, 4));
        assert_eq!(numerical_rank_relative(&d, 1e-9).unwrap(), 3);
        assert_eq!(jacobian_rank(&f, &p, 1e-9).unwrap(), 3);
    }

    #[test]
    fn reduced_rank_matches_full_jacobian() {
        for seed in 0..6 {
            let mut rng = substream(2, seed);
            use rand::Rng;
            let p = ObservationPattern::from_predicate(6, 7, |_, _| rng.random::<f64>() < 0.6).unwrap();
            let f = LowRankFactors::gaussian(6, 7, 2, &mut rng);
            let full = numerical_rank_relative(&jacobian(&f, &p).unwrap(), 1e-9).unwrap();
            assert_eq!(jacobian_rank(&f, &p, 1e-9).unwrap(), full);
        }
    }

    #[test]
    fn full_observation_reaches_manifold_dimension() {
        let p = ObservationPattern::full(5, 6).unwrap();
        let res = characteristic_rank(&p, 2, 3, 7).unwrap();
        assert_eq!(res.rho, 2 * (5 + 6 - 2));
        assert!(res.generic_well_posed);
    }

    #[test]
    fn wilson_pattern_rank_three() {
        let p = off_diagonal(6).unwrap();
        let res = characteristic_rank(&p, 3, 5, 11).unwrap();
        assert_eq!(res.f_rm, 33);
        assert_eq!(res.rho, 33);
        assert!(res.ranks_per_trial.iter().all(|&k| k == 33));
    }

    #[test]
    fn reducible_pattern_is_deficient() {
        let p = block_diagonal(12, 14, 6, 7).unwrap();
        let res = characteristic_rank(&p, 3, 3, 5).unwrap();
        assert!(res.rho < res.f_rm, "{res:?}");
    }

    #[test]
    fn order_independent_and_reproducible() {
        let p = off_diagonal(5).unwrap();
        let a = characteristic_rank(&p, 2, 8, 42).unwrap();
        let b = characteristic_rank(&p, 2, 8, 42).unwrap();
        assert_eq!(a, b);
    }
}
