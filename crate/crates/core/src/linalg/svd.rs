//! Thin singular value decomposition.
//!
//! Householder bidiagonalization followed by implicit-shift QR on the
//! bidiagonal (Golub–Kahan–Reinsch). The routine is deterministic: the same
//! input always produces bit-identical output.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

const MAX_QR_SWEEPS: usize = 75;

/// `A = U · diag(σ) · Vt` with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// rows × k, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// k × cols, orthonormal rows.
    pub vt: DenseMatrix,
}

impl SvdResult {
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    pub fn largest(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.truncated(self.k())
    }

    /// Best rank-`r` approximation `U_r diag(σ_1..σ_r) Vt_r`.
    pub fn truncated(&self, r: usize) -> DenseMatrix {
        let r = r.min(self.k());
        let rows = self.u.rows();
        let cols = self.vt.cols();
        let mut out = DenseMatrix::zeros(rows, cols);
        for t in 0..r {
            let s = self.singular_values[t];
            if s == 0.0 {
                continue;
            }
            let vt_row = self.vt.row(t);
            for i in 0..rows {
                let a = self.u[(i, t)] * s;
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.as_mut_slice()[i * cols..(i + 1) * cols];
                for (o, &b) in out_row.iter_mut().zip(vt_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// First `r` left singular vectors as a rows × r matrix.
    pub fn u_leading(&self, r: usize) -> DenseMatrix {
        self.u.leading_cols(r)
    }

    /// First `r` right singular vectors as a cols × r matrix.
    pub fn v_leading(&self, r: usize) -> DenseMatrix {
        self.vt.leading_rows(r).transpose()
    }
}

/// Full thin SVD.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    if !a.is_finite() {
        let pos = a.as_slice().iter().position(|v| !v.is_finite()).unwrap();
        return Err(Error::NonFinite {
            row: pos / a.cols(),
            col: pos % a.cols(),
            value: a.as_slice()[pos],
        });
    }
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(SvdResult {
            u: DenseMatrix::zeros(m, 0),
            singular_values: Vec::new(),
            vt: DenseMatrix::zeros(0, n),
        });
    }
    if m >= n {
        let mut work = a.as_slice().to_vec();
        let mut w = vec![0.0; n];
        let mut v = vec![0.0; n * n];
        golub_reinsch(&mut work, m, n, &mut w, Some(&mut v), true)
            .map_err(|iterations| Error::SvdNonConvergence { rows: m, cols: n, iterations })?;
        Ok(sorted(m, n, work, w, v, false))
    } else {
        // Decompose the transpose and swap the roles of U and V.
        let at = a.transpose();
        let mut work = at.as_slice().to_vec();
        let mut w = vec![0.0; m];
        let mut v = vec![0.0; m * m];
        golub_reinsch(&mut work, n, m, &mut w, Some(&mut v), true)
            .map_err(|iterations| Error::SvdNonConvergence { rows: m, cols: n, iterations })?;
        Ok(sorted(n, m, work, w, v, true))
    }
}

/// Singular values only, in nonincreasing order. Skips accumulation of the
/// orthogonal factors, which makes it several times cheaper than [`svd`].
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument("non-finite matrix entries".into()));
    }
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Vec::new());
    }
    let (mut work, rows, cols) = if m >= n {
        (a.as_slice().to_vec(), m, n)
    } else {
        (a.transpose().as_slice().to_vec(), n, m)
    };
    let mut w = vec![0.0; cols];
    golub_reinsch(&mut work, rows, cols, &mut w, None, false)
        .map_err(|iterations| Error::SvdNonConvergence { rows: m, cols: n, iterations })?;
    w.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(w)
}

/// Counts singular values strictly above `tol`. `tol = 0` selects the
/// default `max(rows, cols) · σ₁ · ε`.
pub fn numerical_rank(a: &DenseMatrix, tol: f64) -> Result<usize> {
    let sv = singular_values(a)?;
    Ok(rank_from_values(&sv, a.rows().max(a.cols()), tol))
}

/// Rank at a threshold relative to the largest singular value.
pub fn numerical_rank_relative(a: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(a)?;
    let s1 = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| s > rel_tol * s1).count())
}

pub(crate) fn rank_from_values(sv: &[f64], max_dim: usize, tol: f64) -> usize {
    let s1 = sv.first().copied().unwrap_or(0.0);
    let tol = if tol > 0.0 {
        tol
    } else {
        max_dim as f64 * s1 * f64::EPSILON
    };
    sv.iter().filter(|&&s| s > tol).count()
}

fn sorted(m: usize, n: usize, u: Vec<f64>, w: Vec<f64>, v: Vec<f64>, swap: bool) -> SvdResult {
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the output deterministic for tied values.
    order.sort_by(|&x, &y| w[y].partial_cmp(&w[x]).unwrap());
    let singular_values: Vec<f64> = order.iter().map(|&t| w[t]).collect();
    // u: m×n row-major, v: n×n row-major (columns are right vectors).
    let u_sorted = DenseMatrix::from_fn(m, n, |i, t| u[i * n + order[t]]);
    let vt_sorted = DenseMatrix::from_fn(n, n, |t, j| v[j * n + order[t]]);
    if swap {
        // A = (Aᵀ)ᵀ = V Σ Uᵀ.
        SvdResult {
            u: vt_sorted.transpose(),
            singular_values,
            vt: u_sorted.transpose(),
        }
    } else {
        SvdResult {
            u: u_sorted,
            singular_values,
            vt: vt_sorted,
        }
    }
}

#[inline]
fn pythag(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// In-place Golub–Reinsch on a row-major `m × n` buffer with `m ≥ n`.
///
/// On success `a` holds U (when `want_u`), `w` the unsorted nonnegative
/// singular values and `v` (if given) the n × n right factor. Returns the
/// sweep count on failure.
fn golub_reinsch(
    a: &mut [f64],
    m: usize,
    n: usize,
    w: &mut [f64],
    mut v: Option<&mut [f64]>,
    want_u: bool,
) -> std::result::Result<(), usize> {
    debug_assert!(m >= n);
    let idx = |i: usize, j: usize| i * n + j;
    let mut rv1 = vec![0.0; n];
    let mut g = 0.0_f64;
    let mut scale = 0.0_f64;
    let mut anorm = 0.0_f64;
    let mut l = 0;

    // Householder reduction to bidiagonal form.
    for i in 0..n {
        l = i + 1;
        rv1[i] = scale * g;
        g = 0.0;
        let mut s = 0.0;
        scale = 0.0;
        if i < m {
            for k in i..m {
                scale += a[idx(k, i)].abs();
            }
            if scale != 0.0 {
                for k in i..m {
                    a[idx(k, i)] /= scale;
                    s += a[idx(k, i)] * a[idx(k, i)];
                }
                let f = a[idx(i, i)];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                a[idx(i, i)] = f - g;
                for j in l..n {
                    let mut s = 0.0;
                    for k in i..m {
                        s += a[idx(k, i)] * a[idx(k, j)];
                    }
                    let f = s / h;
                    for k in i..m {
                        a[idx(k, j)] += f * a[idx(k, i)];
                    }
                }
                for k in i..m {
                    a[idx(k, i)] *= scale;
                }
            }
        }
        w[i] = scale * g;
        g = 0.0;
        s = 0.0;
        scale = 0.0;
        if i < m && i + 1 != n {
            for k in l..n {
                scale += a[idx(i, k)].abs();
            }
            if scale != 0.0 {
                for k in l..n {
                    a[idx(i, k)] /= scale;
                    s += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                a[idx(i, l)] = f - g;
                for k in l..n {
                    rv1[k] = a[idx(i, k)] / h;
                }
                for j in l..m {
                    let mut s = 0.0;
                    for k in l..n {
                        s += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in l..n {
                        a[idx(j, k)] += s * rv1[k];
                    }
                }
                for k in l..n {
                    a[idx(i, k)] *= scale;
                }
            }
        }
        anorm = anorm.max(w[i].abs() + rv1[i].abs());
    }

    // Accumulate right-hand transformations.
    if let Some(v) = v.as_deref_mut() {
        for i in (0..n).rev() {
            if i + 1 < n {
                if g != 0.0 {
                    for j in l..n {
                        // Double division avoids possible underflow.
                        v[idx(j, i)] = (a[idx(i, j)] / a[idx(i, l)]) / g;
                    }
                    for j in l..n {
                        let mut s = 0.0;
                        for k in l..n {
                            s += a[idx(i, k)] * v[idx(k, j)];
                        }
                        for k in l..n {
                            v[idx(k, j)] += s * v[idx(k, i)];
                        }
                    }
                }
                for j in l..n {
                    v[idx(i, j)] = 0.0;
                    v[idx(j, i)] = 0.0;
                }
            }
            v[idx(i, i)] = 1.0;
            g = rv1[i];
            l = i;
        }
    }

    // Accumulate left-hand transformations.
    if want_u {
        for i in (0..n.min(m)).rev() {
            let l = i + 1;
            let mut g = w[i];
            for j in l..n {
                a[idx(i, j)] = 0.0;
            }
            if g != 0.0 {
                g = 1.0 / g;
                for j in l..n {
                    let mut s = 0.0;
                    for k in l..m {
                        s += a[idx(k, i)] * a[idx(k, j)];
                    }
                    let f = (s / a[idx(i, i)]) * g;
                    for k in i..m {
                        a[idx(k, j)] += f * a[idx(k, i)];
                    }
                }
                for j in i..m {
                    a[idx(j, i)] *= g;
                }
            } else {
                for j in i..m {
                    a[idx(j, i)] = 0.0;
                }
            }
            a[idx(i, i)] += 1.0;
        }
    }

    // Diagonalize the bidiagonal form.
    let eps = f64::EPSILON;
    let negligible = |x: f64| x.abs() <= eps * anorm;
    for k in (0..n).rev() {
        let mut its = 0;
        loop {
            let mut flag = true;
            let mut l = k;
            let mut nm = 0;
            loop {
                if l == 0 || negligible(rv1[l]) {
                    flag = false;
                    break;
                }
                nm = l - 1;
                if negligible(w[nm]) {
                    break;
                }
                l -= 1;
            }
            if flag {
                // Cancel rv1[l] when w[nm] is negligible.
                let mut c = 0.0;
                let mut s = 1.0;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if negligible(f) {
                        break;
                    }
                    let g = w[i];
                    let h = pythag(f, g);
                    w[i] = h;
                    let h = 1.0 / h;
                    c = g * h;
                    s = -f * h;
                    if want_u {
                        for j in 0..m {
                            let y = a[idx(j, nm)];
                            let z = a[idx(j, i)];
                            a[idx(j, nm)] = y * c + z * s;
                            a[idx(j, i)] = z * c - y * s;
                        }
                    }
                }
            }
            let z = w[k];
            if l == k {
                if z < 0.0 {
                    w[k] = -z;
                    if let Some(v) = v.as_deref_mut() {
                        for j in 0..n {
                            v[idx(j, k)] = -v[idx(j, k)];
                        }
                    }
                }
                break;
            }
            if its == MAX_QR_SWEEPS {
                return Err(its);
            }
            its += 1;

            // Shift from the bottom 2×2 minor.
            let mut x = w[l];
            let nm = k - 1;
            let mut y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = pythag(f, 1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + sign(g, f))) - h)) / x;

            // Next QR transformation.
            let mut c = 1.0;
            let mut s = 1.0;
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                y = w[i];
                h = s * g;
                g *= c;
                let mut z = pythag(f, h);
                rv1[j] = z;
                c = f / z;
                s = h / z;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                if let Some(v) = v.as_deref_mut() {
                    for jj in 0..n {
                        let xv = v[idx(jj, j)];
                        let zv = v[idx(jj, i)];
                        v[idx(jj, j)] = xv * c + zv * s;
                        v[idx(jj, i)] = zv * c - xv * s;
                    }
                }
                z = pythag(f, h);
                w[j] = z;
                if z != 0.0 {
                    let zi = 1.0 / z;
                    c = f * zi;
                    s = h * zi;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                if want_u {
                    for jj in 0..m {
                        let ya = a[idx(jj, j)];
                        let za = a[idx(jj, i)];
                        a[idx(jj, j)] = ya * c + za * s;
                        a[idx(jj, i)] = za * c - ya * s;
                    }
                }
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn assert_orthonormal_cols(q: &DenseMatrix, tol: f64) {
        let g = q.t_matmul(q);
        let err = g.sub(&DenseMatrix::identity(q.cols())).max_abs();
        assert!(err < tol, "orthonormality error {err}");
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_case() {
        let a = DenseMatrix::diag(&[1.0, 3.0, 2.0]);
        let s = svd(&a).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 2.0, 1.0]);
        // Columns of U are signed unit vectors e_2, e_3, e_1.
        for (t, &row) in [1usize, 2, 0].iter().enumerate() {
            assert!((s.u[(row, t)].abs() - 1.0).abs() < 1e-15);
            assert!((s.vt[(t, row)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_5x4_reconstructs() {
        let a = random(5, 4, 7);
        let s = svd(&a).unwrap();
        let err = s.reconstruct().sub(&a).frobenius_norm();
        assert!(err < 1e-10 * s.largest() * 20f64.sqrt(), "err {err}");
        assert_orthonormal_cols(&s.u, 1e-10);
        assert_orthonormal_cols(&s.vt.transpose(), 1e-10);
    }

    #[test]
    fn wide_and_rank_deficient() {
        let u = random(3, 1, 1);
        let v = random(1, 7, 2);
        let a = u.matmul(&v);
        let s = svd(&a).unwrap();
        assert_eq!(s.k(), 3);
        assert_orthonormal_cols(&s.u, 1e-12);
        assert_orthonormal_cols(&s.vt.transpose(), 1e-12);
        assert!(s.reconstruct().sub(&a).max_abs() < 1e-14);
        assert_eq!(numerical_rank(&a, 0.0).unwrap(), 1);
    }

    #[test]
    fn zero_matrix_rank_zero() {
        let z = DenseMatrix::zeros(4, 4);
        assert_eq!(numerical_rank(&z, 0.0).unwrap(), 0);
        assert_eq!(numerical_rank(&z, 1.0).unwrap(), 0);
        let s = svd(&z).unwrap();
        assert_orthonormal_cols(&s.u, 1e-15);
    }

    #[test]
    fn values_only_match_full() {
        let a = random(9, 6, 3);
        let full = svd(&a).unwrap().singular_values;
        let only = singular_values(&a).unwrap();
        for (x, y) in full.iter().zip(&only) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn deterministic() {
        let a = random(11, 8, 5);
        let s1 = svd(&a).unwrap();
        let s2 = svd(&a).unwrap();
        assert_eq!(s1.singular_values, s2.singular_values);
        assert_eq!(s1.u, s2.u);
    }
}
