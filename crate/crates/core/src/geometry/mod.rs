//! Geometry of the rank-`r` manifold at a point: complements, tangent space,
//! the Kronecker-column well-posedness certificate and the characteristic
//! rank of the parametrization `(V, W, X) ↦ VWᵀ + X`.

mod jacobian;
mod tangent;
mod wellposed;

pub use jacobian::{characteristic_rank, jacobian, CharRankResult, LowRankFactors};
pub use tangent::{project_tangent, tangent_basis, TangentBasis, TangentProjection};
pub use wellposed::{
    duality_check, kronecker_matrix, wellposedness_check, wellposedness_check_with, Decision,
    WellPosednessOptions, WellPosednessReport,
};

use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement, svd, DenseMatrix};

/// Relative rank threshold (multiplied by σ₁) used when none is supplied.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

pub(crate) fn resolve_tol(tol: f64) -> f64 {
    if tol > 0.0 {
        tol
    } else {
        DEFAULT_RANK_TOL
    }
}

/// Left and right complements of a rank-`r` matrix `Y`, together with the
/// dominant singular subspaces they complement.
#[derive(Debug, Clone)]
pub struct Complements {
    /// (n1 − r) × n1 with orthonormal rows, `F·Y = 0`.
    pub f: DenseMatrix,
    /// n2 × (n2 − r) with orthonormal columns, `Y·G = 0`.
    pub g: DenseMatrix,
    /// n1 × r, dominant left singular vectors.
    pub u: DenseMatrix,
    /// n2 × r, dominant right singular vectors.
    pub v: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub tol_used: f64,
}

/// Computes `F` and `G` from the SVD of `Y`.
///
/// `tol` is relative to σ₁(Y) (`0` selects [`DEFAULT_RANK_TOL`]); the
/// numerical rank at that threshold must equal `r`.
pub fn complements(y: &DenseMatrix, r: usize, tol: f64) -> Result<Complements> {
    let tol = resolve_tol(tol);
    let (n1, n2) = y.shape();
    if r > n1.min(n2) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} exceeds min({n1}, {n2})"
        )));
    }
    let s = svd(y)?;
    let s1 = s.largest();
    let found = s.singular_values.iter().filter(|&&v| v > tol * s1).count();
    if found != r {
        return Err(Error::RankMismatch { requested: r, found });
    }
    let u = s.u_leading(r);
    let v = s.v_leading(r);
    let f = orthogonal_complement(&u).transpose();
    let g = orthogonal_complement(&v);
    Ok(Complements {
        f,
        g,
        u,
        v,
        singular_values: s.singular_values,
        tol_used: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormalize;
    use crate::random::{gaussian_matrix, substream};

    #[test]
    fn unit_outer_product() {
        let mut y = DenseMatrix::zeros(3, 3);
        y[(0, 0)] = 1.0;
        let c = complements(&y, 1, 0.0).unwrap();
        assert_eq!(c.f.shape(), (2, 3));
        assert_eq!(c.g.shape(), (3, 2));
        assert_eq!(c.f.matmul(&y).max_abs(), 0.0);
        assert_eq!(y.matmul(&c.g).max_abs(), 0.0);
        // Rows of F span e2, e3.
        for a in 0..2 {
            assert_eq!(c.f[(a, 0)], 0.0);
        }
    }

    #[test]
    fn random_orthonormal_factors() {
        let mut rng = substream(11, 0);
        let v = orthonormalize(&gaussian_matrix(5, 2, &mut rng)).unwrap();
        let w = orthonormalize(&gaussian_matrix(5, 2, &mut rng)).unwrap();
        let y = v.matmul(&w.transpose());
        let c = complements(&y, 2, 0.0).unwrap();
        assert!(c.f.matmul(&y).frobenius_norm() < 1e-10);
        assert!(y.matmul(&c.g).frobenius_norm() < 1e-10);
    }

    #[test]
    fn rank_mismatch_reported() {
        let y = DenseMatrix::identity(3);
        match complements(&y, 2, 0.0) {
            Err(Error::RankMismatch { requested: 2, found: 3 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
