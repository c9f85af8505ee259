//! Dense real-matrix primitives: SVD, numerical rank, orthonormalization,
//! least squares and Kronecker columns.

mod matrix;
mod qr;
mod svd;

pub use matrix::DenseMatrix;
pub use qr::{
    cholesky_solve, lstsq_full_rank, lstsq_min_norm, orthogonal_complement, orthonormalize, solve,
};
pub use svd::{numerical_rank, numerical_rank_relative, singular_values, svd, SvdResult};

/// `gᵀ ⊗ f` laid out so that `vec(F · E_ij · G) = kron_column(G[j, :], F[:, i])`.
///
/// The result has `g.len()` blocks of length `f.len()`; block `b` is `g[b] · f`.
pub fn kron_column(g: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len() * f.len());
    for &gb in g {
        out.extend(f.iter().map(|&fa| gb * fa));
    }
    out
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm(a: &DenseMatrix) -> crate::Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_small_cases() {
        assert_eq!(kron_column(&[1.0], &[1.0]), vec![1.0]);
        assert_eq!(kron_column(&[1.0, 2.0], &[3.0, 4.0]), vec![3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn kron_matches_vec_of_product_3x3() {
        let f = DenseMatrix::from_rows(&[&[1.0, -2.0, 0.5], &[3.0, 0.0, 1.5], &[-1.0, 2.5, 4.0]]);
        let g = DenseMatrix::from_rows(&[&[2.0, 1.0, -1.0], &[0.5, -3.0, 2.0], &[1.0, 1.0, 0.25]]);
        for i in 0..3 {
            for j in 0..3 {
                let mut e = DenseMatrix::zeros(3, 3);
                e[(i, j)] = 1.0;
                let brute = f.matmul(&e).matmul(&g).vec();
                assert_eq!(kron_column(g.row(j), &f.col(i)), brute);
            }
        }
    }
}
