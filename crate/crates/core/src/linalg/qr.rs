use super::matrix::DenseMatrix;
use super::svd::svd;
use crate::error::{Error, Result};

/// Householder QR of a tall matrix (rows ≥ cols).
///
/// Reflectors are stored compactly; `q_full` and `q_thin` materialize the
/// orthogonal factor on demand.
struct Householder {
    rows: usize,
    cols: usize,
    /// Reflector vectors, one per column, each of length `rows - k`.
    reflectors: Vec<Vec<f64>>,
    /// Upper triangle of R (cols × cols).
    r: DenseMatrix,
}

impl Householder {
    fn new(a: &DenseMatrix) -> Self {
        let (m, n) = a.shape();
        assert!(m >= n, "Householder QR needs rows >= cols");
        let mut work = a.clone();
        let mut reflectors = Vec::with_capacity(n);
        for k in 0..n {
            let mut v: Vec<f64> = (k..m).map(|i| work[(i, k)]).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                reflectors.push(vec![0.0; m - k]);
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= vnorm;
            }
            for j in k..n {
                let dot: f64 = (k..m).map(|i| v[i - k] * work[(i, j)]).sum();
                for i in k..m {
                    work[(i, j)] -= 2.0 * v[i - k] * dot;
                }
            }
            reflectors.push(v);
        }
        let r = DenseMatrix::from_fn(n, n, |i, j| if j >= i { work[(i, j)] } else { 0.0 });
        Householder {
            rows: m,
            cols: n,
            reflectors,
            r,
        }
    }

    /// Applies H_1 H_2 … H_n to the columns of `x` (rows × p).
    fn apply_q(&self, x: &mut DenseMatrix) {
        let m = self.rows;
        for k in (0..self.cols).rev() {
            let v = &self.reflectors[k];
            for j in 0..x.cols() {
                let dot: f64 = (k..m).map(|i| v[i - k] * x[(i, j)]).sum();
                if dot != 0.0 {
                    for i in k..m {
                        x[(i, j)] -= 2.0 * v[i - k] * dot;
                    }
                }
            }
        }
    }

    fn q_first(&self, p: usize) -> DenseMatrix {
        let mut q = DenseMatrix::from_fn(self.rows, p, |i, j| if i == j { 1.0 } else { 0.0 });
        self.apply_q(&mut q);
        q
    }
}

/// Orthonormal basis of the column span of a full-column-rank matrix.
///
/// Columns are signed so that the triangular factor has a positive diagonal;
/// an input that already has orthonormal columns comes back unchanged.
pub fn orthonormalize(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    if n > m {
        return Err(Error::RankDeficient(format!(
            "{m}x{n} matrix has more columns than rows"
        )));
    }
    if n == 0 {
        return Ok(DenseMatrix::zeros(m, 0));
    }
    let qr = Householder::new(a);
    let diag_max = (0..n).fold(0.0_f64, |acc, k| acc.max(qr.r[(k, k)].abs()));
    let scale = a.max_abs().max(diag_max);
    let tol = 1e-12 * scale * (m as f64).sqrt();
    for k in 0..n {
        if qr.r[(k, k)].abs() <= tol {
            return Err(Error::RankDeficient(format!(
                "column {k} of a {m}x{n} matrix is (numerically) dependent on earlier columns"
            )));
        }
    }
    let mut q = qr.q_first(n);
    for k in 0..n {
        if qr.r[(k, k)] < 0.0 {
            for i in 0..m {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(q)
}

/// Orthonormal basis (n × (n − r)) of the orthogonal complement of the span
/// of an n × r matrix with orthonormal columns.
pub fn orthogonal_complement(q: &DenseMatrix) -> DenseMatrix {
    let (n, r) = q.shape();
    if r == 0 {
        return DenseMatrix::identity(n);
    }
    let qr = Householder::new(q);
    let full = qr.q_first(n);
    DenseMatrix::from_fn(n, n - r, |i, j| full[(i, r + j)])
}

/// Least-squares solution of `A x ≈ b` for a full-column-rank `A`.
///
/// Uses the SVD so that loss of column rank is detected reliably: if
/// `σ_min ≤ rcond · σ_max` an error is returned instead of a minimum-norm
/// answer.
pub fn lstsq_full_rank(a: &DenseMatrix, b: &[f64], rcond: f64) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    assert_eq!(m, b.len());
    if n == 0 {
        return Ok(Vec::new());
    }
    if m < n {
        return Err(Error::RankDeficient(format!(
            "least squares with {m} equations and {n} unknowns"
        )));
    }
    let s = svd(a)?;
    let smax = s.largest();
    let smin = *s.singular_values.last().unwrap();
    if smax == 0.0 || smin <= rcond * smax {
        return Err(Error::RankDeficient(format!(
            "design matrix condition {:.3e} exceeds 1/rcond",
            if smin == 0.0 { f64::INFINITY } else { smax / smin }
        )));
    }
    let utb: Vec<f64> = (0..n)
        .map(|t| (0..m).map(|i| s.u[(i, t)] * b[i]).sum::<f64>() / s.singular_values[t])
        .collect();
    Ok((0..n)
        .map(|j| (0..n).map(|t| s.vt[(t, j)] * utb[t]).sum())
        .collect())
}

/// Minimum-norm least-squares solution via pseudo-inverse (singular values
/// below `rcond · σ_max` are dropped).
pub fn lstsq_min_norm(a: &DenseMatrix, b: &[f64], rcond: f64) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    assert_eq!(m, b.len());
    let s = svd(a)?;
    let cutoff = rcond * s.largest();
    let k = s.k();
    let coef: Vec<f64> = s
        .singular_values
        .iter()
        .enumerate()
        .map(|(t, &sv)| {
            if sv > cutoff && sv > 0.0 {
                (0..m).map(|i| s.u[(i, t)] * b[i]).sum::<f64>() / sv
            } else {
                0.0
            }
        })
        .collect();
    Ok((0..n)
        .map(|j| (0..k).map(|t| s.vt[(t, j)] * coef[t]).sum())
        .collect())
}

/// Solves the square system `A x = b` by LU with partial pivoting.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = a.max_abs();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].abs().partial_cmp(&lu[(j, k)].abs()).unwrap())
            .unwrap();
        if lu[(p, k)].abs() <= f64::EPSILON * scale * n as f64 {
            return Err(Error::RankDeficient(format!("singular {n}x{n} system")));
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| lu[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / lu[(k, k)];
    }
    Ok(x)
}

/// Solves a symmetric positive definite system by Cholesky; returns `None`
/// when the matrix is not numerically positive definite.
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 1e-14 * a[(j, j)].abs().max(f64::MIN_POSITIVE) || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        y[i] = (y[i] - s) / l[(i, i)];
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * y[k]).sum();
        y[i] = (y[i] - s) / l[(i, i)];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn single_column_normalized() {
        let a = DenseMatrix::from_rows(&[&[3.0], &[4.0]]);
        let q = orthonormalize(&a).unwrap();
        assert!((q[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((q[(1, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_input_unchanged() {
        let q0 = orthonormalize(&gaussian(6, 3, 1)).unwrap();
        let q1 = orthonormalize(&q0).unwrap();
        assert!(q1.sub(&q0).max_abs() < 1e-12);
    }

    #[test]
    fn gaussian_40x10_orthonormal() {
        let a = gaussian(40, 10, 2);
        let q = orthonormalize(&a).unwrap();
        let err = q.t_matmul(&q).sub(&DenseMatrix::identity(10)).max_abs();
        assert!(err < 1e-12, "{err}");
        // Same span: projecting A onto span(Q) leaves A unchanged.
        let proj = q.matmul(&q.t_matmul(&a));
        assert!(proj.sub(&a).max_abs() < 1e-12 * a.max_abs() * 10.0);
    }

    #[test]
    fn dependent_columns_rejected() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert!(matches!(orthonormalize(&a), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn complement_is_orthogonal() {
        let q = orthonormalize(&gaussian(7, 3, 4)).unwrap();
        let c = orthogonal_complement(&q);
        assert_eq!(c.shape(), (7, 4));
        assert!(q.t_matmul(&c).max_abs() < 1e-14);
        assert!(c.t_matmul(&c).sub(&DenseMatrix::identity(4)).max_abs() < 1e-14);
    }

    #[test]
    fn solvers_agree() {
        let a = gaussian(5, 5, 9);
        let x_true = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let b = a.matvec(&x_true);
        for x in [
            solve(&a, &b).unwrap(),
            lstsq_full_rank(&a, &b, 1e-12).unwrap(),
            lstsq_min_norm(&a, &b, 1e-12).unwrap(),
        ] {
            for (p, q) in x.iter().zip(&x_true) {
                assert!((p - q).abs() < 1e-10);
            }
        }
        let spd = a.t_matmul(&a);
        let b2 = spd.matvec(&x_true);
        let x = cholesky_solve(&spd, &b2).unwrap();
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-8);
        }
    }
}
