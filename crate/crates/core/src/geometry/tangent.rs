use super::{complements, resolve_tol};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_full_rank, DenseMatrix};
use crate::pattern::ObservationPattern;

/// Frobenius-orthonormal basis of the tangent space `{Q₁Y + YQ₂}` at a
/// rank-`r` matrix.
///
/// Every element is a rank-one matrix `x yᵀ` drawn from the blocks
/// `U·Vᵀ`, `U⊥·Vᵀ` and `U·V⊥ᵀ`, which gives exactly `r(n1 + n2 − r)`
/// elements.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    n1: usize,
    n2: usize,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl TangentBasis {
    pub fn dim(&self) -> usize {
        self.left.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Element `t` as a dense matrix.
    pub fn element(&self, t: usize) -> DenseMatrix {
        let (x, y) = (&self.left[t], &self.right[t]);
        DenseMatrix::from_fn(self.n1, self.n2, |i, j| x[i] * y[j])
    }

    /// All elements as dense matrices.
    pub fn basis(&self) -> Vec<DenseMatrix> {
        (0..self.dim()).map(|t| self.element(t)).collect()
    }

    #[inline]
    fn value(&self, t: usize, i: usize, j: usize) -> f64 {
        self.left[t][i] * self.right[t][j]
    }

    /// `Σ_t coef[t] · element(t)`.
    pub fn combine(&self, coef: &[f64]) -> DenseMatrix {
        assert_eq!(coef.len(), self.dim());
        let mut h = DenseMatrix::zeros(self.n1, self.n2);
        for (t, &c) in coef.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for i in 0..self.n1 {
                let a = c * self.left[t][i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..self.n2 {
                    h[(i, j)] += a * self.right[t][j];
                }
            }
        }
        h
    }
}

pub fn tangent_basis(y: &DenseMatrix, r: usize, tol: f64) -> Result<TangentBasis> {
    let c = complements(y, r, tol)?;
    let (n1, n2) = y.shape();
    let mut left = Vec::with_capacity(r * (n1 + n2 - r));
    let mut right = Vec::with_capacity(r * (n1 + n2 - r));
    let u: Vec<Vec<f64>> = (0..r).map(|a| c.u.col(a)).collect();
    let v: Vec<Vec<f64>> = (0..r).map(|b| c.v.col(b)).collect();
    for ua in &u {
        for vb in &v {
            left.push(ua.clone());
            right.push(vb.clone());
        }
    }
    for a in 0..c.f.rows() {
        let u_perp = c.f.row(a).to_vec();
        for vb in &v {
            left.push(u_perp.clone());
            right.push(vb.clone());
        }
    }
    for b in 0..c.g.cols() {
        let v_perp = c.g.col(b);
        for ua in &u {
            left.push(ua.clone());
            right.push(v_perp.clone());
        }
    }
    Ok(TangentBasis {
        n1,
        n2,
        left,
        right,
    })
}

/// Weighted least-squares projection of data on Ω onto the tangent space.
#[derive(Debug, Clone)]
pub struct TangentProjection {
    /// The minimizing tangent vector.
    pub h: DenseMatrix,
    /// `Σ_Ω w_ij (W_ij − H_ij)²` at the minimizer.
    pub residual: f64,
}

/// Finds `H` in the tangent space at `Y` minimizing
/// `Σ_{(i,j)∈Ω} w_ij (values_ij − H_ij)²`.
///
/// `values` and `weights` follow the order of `p.entries()`; `None` weights
/// mean unit weights. The map is linear in `values`. Fails with
/// [`Error::IllPosed`] when the observed coordinates do not determine a
/// unique tangent vector.
pub fn project_tangent(
    p: &ObservationPattern,
    values: &[f64],
    y: &DenseMatrix,
    r: usize,
    weights: Option<&[f64]>,
    tol: f64,
) -> Result<TangentProjection> {
    let tol = resolve_tol(tol);
    if values.len() != p.m() || weights.is_some_and(|w| w.len() != p.m()) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} values/weights on the pattern",
            p.m()
        )));
    }
    if y.shape() != (p.n1(), p.n2()) {
        return Err(Error::DimensionMismatch("matrix does not match pattern grid".into()));
    }
    let basis = tangent_basis(y, r, tol)?;
    let d = basis.dim();
    if p.m() < d {
        return Err(Error::IllPosed { rank: r });
    }
    let sqrt_w: Vec<f64> = match weights {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; p.m()],
    };
    let mut a = DenseMatrix::zeros(p.m(), d);
    for (k, &(i, j)) in p.entries().iter().enumerate() {
        for t in 0..d {
            a[(k, t)] = sqrt_w[k] * basis.value(t, i, j);
        }
    }
    let b: Vec<f64> = values.iter().zip(&sqrt_w).map(|(v, s)| v * s).collect();
    let coef = lstsq_full_rank(&a, &b, tol).map_err(|e| match e {
        Error::RankDeficient(_) => Error::IllPosed { rank: r },
        other => other,
    })?;
    let h = basis.combine(&coef);
    let residual = p
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let w = weights.map_or(1.0, |w| w[k]);
            w * (values[k] - h[(i, j)]).powi(2)
        })
        .sum();
    Ok(TangentProjection { h, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, orthonormalize};
    use crate::pattern::off_diagonal;
    use crate::random::{gaussian_matrix, substream};
    use rand::Rng;

    fn low_rank(n1: usize, n2: usize, r: usize, seed: u64) -> DenseMatrix {
        let mut rng = substream(seed, 0);
        gaussian_matrix(n1, r, &mut rng).matmul(&gaussian_matrix(r, n2, &mut rng))
    }

    #[test]
    fn dimension_formula() {
        let mut y = DenseMatrix::zeros(2, 2);
        y[(0, 0)] = 1.0;
        assert_eq!(tangent_basis(&y, 1, 0.0).unwrap().dim(), 3);
        let y = low_rank(40, 50, 10, 1);
        assert_eq!(tangent_basis(&y, 10, 0.0).unwrap().dim(), 800);
    }

    #[test]
    fn elements_annihilated_by_complements_and_orthonormal() {
        let y = low_rank(5, 7, 2, 2);
        let c = complements(&y, 2, 0.0).unwrap();
        let tb = tangent_basis(&y, 2, 0.0).unwrap();
        let basis = tb.basis();
        for h in &basis {
            let fhg = c.f.matmul(h).matmul(&c.g);
            assert!(fhg.frobenius_norm() < 1e-9 * h.frobenius_norm());
        }
        let vecs = DenseMatrix::from_fn(basis.len(), 35, |t, k| basis[t].vec()[k]);
        let gram = vecs.matmul(&vecs.transpose());
        assert!(gram.sub(&DenseMatrix::identity(basis.len())).max_abs() < 1e-12);
    }

    #[test]
    fn spans_the_generating_set() {
        // {E_ij Y} ∪ {Y E_kl} spans the same space as the returned basis.
        let (n1, n2, r) = (4, 5, 2);
        let y = low_rank(n1, n2, r, 3);
        let tb = tangent_basis(&y, r, 0.0).unwrap();
        let mut gens = Vec::new();
        for i in 0..n1 {
            for j in 0..n1 {
                let mut e = DenseMatrix::zeros(n1, n1);
                e[(i, j)] = 1.0;
                gens.push(e.matmul(&y).vec());
            }
        }
        for k in 0..n2 {
            for l in 0..n2 {
                let mut e = DenseMatrix::zeros(n2, n2);
                e[(k, l)] = 1.0;
                gens.push(y.matmul(&e).vec());
            }
        }
        let g = DenseMatrix::from_fn(gens.len(), n1 * n2, |a, b| gens[a][b]);
        assert_eq!(numerical_rank(&g, 1e-9 * g.max_abs()).unwrap(), tb.dim());
        let mut all = gens.clone();
        all.extend(tb.basis().iter().map(|h| h.vec()));
        let stacked = DenseMatrix::from_fn(all.len(), n1 * n2, |a, b| all[a][b]);
        assert_eq!(numerical_rank(&stacked, 1e-9 * stacked.max_abs()).unwrap(), tb.dim());
    }

    #[test]
    fn projection_reproduces_manifold_point() {
        let y = low_rank(6, 6, 3, 4);
        let p = off_diagonal(6).unwrap();
        let vals: Vec<f64> = p.entries().iter().map(|&(i, j)| y[(i, j)]).collect();
        let proj = project_tangent(&p, &vals, &y, 3, None, 0.0).unwrap();
        assert!(proj.residual < 1e-20);
        assert!(proj.h.sub(&y).max_abs() < 1e-9 * y.max_abs());
        let zero = project_tangent(&p, &vec![0.0; 30], &y, 3, None, 0.0).unwrap();
        assert_eq!(zero.h.max_abs(), 0.0);
    }

    #[test]
    fn projection_is_linear() {
        let mut rng = substream(5, 0);
        let v = orthonormalize(&gaussian_matrix(8, 2, &mut rng)).unwrap();
        let y = v.matmul(&gaussian_matrix(2, 9, &mut rng));
        let p = ObservationPattern::from_predicate(8, 9, |_, _| rng.random::<f64>() < 0.7).unwrap();
        let w: Vec<f64> = (0..p.m()).map(|_| rng.random_range(0.5..2.0)).collect();
        let w1: Vec<f64> = (0..p.m()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w2: Vec<f64> = (0..p.m()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (1.7, -0.3);
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, z)| a * x + b * z).collect();
        let h1 = project_tangent(&p, &w1, &y, 2, Some(&w), 0.0).unwrap().h;
        let h2 = project_tangent(&p, &w2, &y, 2, Some(&w), 0.0).unwrap().h;
        let hm = project_tangent(&p, &mix, &y, 2, Some(&w), 0.0).unwrap().h;
        let lin = h1.scale(a).add(&h2.scale(b));
        assert!(hm.sub(&lin).max_abs() < 1e-9);
    }

    #[test]
    fn ill_posed_rejected() {
        // A single observed row cannot pin down a rank-2 tangent vector.
        let y = low_rank(4, 4, 2, 6);
        let p = ObservationPattern::from_predicate(4, 4, |i, _| i < 2).unwrap();
        let vals = vec![1.0; p.m()];
        assert!(matches!(
            project_tangent(&p, &vals, &y, 2, None, 0.0),
            Err(Error::IllPosed { rank: 2 })
        ));
    }
}
