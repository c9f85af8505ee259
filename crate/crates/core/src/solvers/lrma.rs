use super::{optimality_residual, ObservedMatrix, SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, lstsq_min_norm, svd, DenseMatrix};
use crate::random::{gaussian_matrix, substream};

/// Rank-`r` least-squares completion `min Σ_Ω w_ij (M_ij − Y_ij)²`.
///
/// Uniform weights use impute-and-project: `Y ← T_r(P_Ω(M) + P_Ω^c(Y))`
/// with `T_r` the truncated SVD. Non-uniform weights switch to alternating
/// weighted least squares over factors `Y = V Wᵀ`, started from the
/// unweighted solution. Both stop when the
/// relative Frobenius change between iterates falls below `cfg.tol`.
pub fn lrma_fixed_rank(m: &ObservedMatrix, r: usize, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate(m)?;
    let (n1, n2) = m.shape();
    if r > n1.min(n2) {
        return Err(Error::InvalidArgument(format!("rank {r} exceeds min({n1}, {n2})")));
    }
    let weights = cfg.weights.as_deref();
    if r == 0 {
        let y_hat = DenseMatrix::zeros(n1, n2);
        return Ok(SolveResult {
            fit: m.weighted_fit(&y_hat, weights),
            optimality_residuals: optimality_residual(&y_hat, m),
            y_hat,
            iterations: 0,
            converged: true,
            history: Vec::new(),
        });
    }
    let (y_hat, iterations, converged, history) = if cfg.uniform_weights() {
        impute_project(m, r, cfg)?
    } else {
        weighted_als(m, r, cfg)?
    };
    Ok(SolveResult {
        fit: m.weighted_fit(&y_hat, weights),
        optimality_residuals: optimality_residual(&y_hat, m),
        y_hat,
        iterations,
        converged,
        history,
    })
}

fn starting_point(m: &ObservedMatrix, r: usize, cfg: &SolverConfig) -> DenseMatrix {
    if let Some(y0) = &cfg.init {
        return y0.clone();
    }
    if cfg.random_init {
        let (n1, n2) = m.shape();
        let mut rng = substream(cfg.seed, 0);
        let y = gaussian_matrix(n1, r, &mut rng).matmul(&gaussian_matrix(r, n2, &mut rng));
        let target = m.norm() * ((n1 * n2) as f64 / m.pattern.m() as f64).sqrt();
        let norm = y.frobenius_norm();
        return if norm > 0.0 { y.scale(target / norm) } else { y };
    }
    m.zero_filled()
}

fn relative_change(new: &DenseMatrix, old: &DenseMatrix) -> f64 {
    let diff = new.sub(old).frobenius_norm();
    let base = old.frobenius_norm();
    if base > 0.0 {
        diff / base
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

type Iterate = (DenseMatrix, usize, bool, Vec<f64>);

fn impute_project(m: &ObservedMatrix, r: usize, cfg: &SolverConfig) -> Result<Iterate> {
    let mut y = starting_point(m, r, cfg);
    let mut history = Vec::new();
    for it in 1..=cfg.max_iter {
        let mut z = y.clone();
        for (&(i, j), &v) in m.pattern.entries().iter().zip(&m.values) {
            z[(i, j)] = v;
        }
        let next = svd(&z)?.truncated(r);
        let change = relative_change(&next, &y);
        y = next;
        if cfg.record_history {
            history.push(m.weighted_fit(&y, None));
        }
        if change < cfg.tol {
            return Ok((y, it, true, history));
        }
    }
    Ok((y, cfg.max_iter, false, history))
}

/// Solves the r × r system `A x = b`, falling back to minimum norm when `A`
/// is not positive definite.
fn small_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    match cholesky_solve(a, b) {
        Some(x) => Ok(x),
        None => lstsq_min_norm(a, b, 1e-12),
    }
}

fn weighted_als(m: &ObservedMatrix, r: usize, cfg: &SolverConfig) -> Result<Iterate> {
    let (n1, n2) = m.shape();
    let w = cfg.weights.as_deref().expect("weighted path needs weights");
    let (mut v, mut wf) = if cfg.random_init && cfg.init.is_none() {
        let mut rng = substream(cfg.seed, 0);
        (gaussian_matrix(n1, r, &mut rng), gaussian_matrix(n2, r, &mut rng))
    } else {
        // Warm start from the unweighted solution unless a start is given.
        let start = match &cfg.init {
            Some(y0) => y0.clone(),
            None => impute_project(m, r, cfg)?.0,
        };
        let s = svd(&start)?;
        let mut v = s.u_leading(r);
        let mut wf = s.v_leading(r);
        for k in 0..r {
            let root = s.singular_values[k].sqrt();
            for i in 0..n1 {
                v[(i, k)] *= root;
            }
            for j in 0..n2 {
                wf[(j, k)] *= root;
            }
        }
        (v, wf)
    };
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n1];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n2];
    for (k, &(i, j)) in m.pattern.entries().iter().enumerate() {
        rows[i].push(k);
        cols[j].push(k);
    }
    let mut y = v.matmul(&wf.transpose());
    let mut history = Vec::new();
    for it in 1..=cfg.max_iter {
        update_factor(m, w, &rows, &wf, &mut v, |k| m.pattern.entries()[k].1);
        update_factor(m, w, &cols, &v, &mut wf, |k| m.pattern.entries()[k].0);
        let next = v.matmul(&wf.transpose());
        let change = relative_change(&next, &y);
        y = next;
        if cfg.record_history {
            history.push(m.weighted_fit(&y, Some(w)));
        }
        if change < cfg.tol {
            return Ok((y, it, true, history));
        }
    }
    Ok((y, cfg.max_iter, false, history))
}

/// Refits every row of `target` against the fixed factor `other`, using the
/// observations listed in `groups` (indices into the pattern entries).
fn update_factor(
    m: &ObservedMatrix,
    w: &[f64],
    groups: &[Vec<usize>],
    other: &DenseMatrix,
    target: &mut DenseMatrix,
    partner: impl Fn(usize) -> usize,
) {
    let r = other.cols();
    for (a, group) in groups.iter().enumerate() {
        let mut gram = DenseMatrix::zeros(r, r);
        let mut rhs = vec![0.0; r];
        for &k in group {
            let z = other.row(partner(k));
            for p in 0..r {
                rhs[p] += w[k] * m.values[k] * z[p];
                for q in 0..r {
                    gram[(p, q)] += w[k] * z[p] * z[q];
                }
            }
        }
        // Rows with no observations keep their current value.
        if group.is_empty() {
            continue;
        }
        if let Ok(x) = small_solve(&gram, &rhs) {
            for p in 0..r {
                target[(a, p)] = x[p];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use crate::pattern::{example_one_blocks, off_diagonal, ObservationPattern};
    use rand::Rng;

    fn low_rank(n1: usize, n2: usize, r: usize, seed: u64) -> DenseMatrix {
        let mut rng = substream(seed, 0);
        gaussian_matrix(n1, r, &mut rng).matmul(&gaussian_matrix(r, n2, &mut rng))
    }

    #[test]
    fn full_observation_is_eckart_young() {
        let y = DenseMatrix::from_fn(5, 4, |i, j| ((3 * i + 5 * j) % 7) as f64 + 0.1 * i as f64);
        let m = ObservedMatrix::from_dense(ObservationPattern::full(5, 4).unwrap(), &y).unwrap();
        let res = lrma_fixed_rank(&m, 2, &SolverConfig::default()).unwrap();
        let sv = singular_values(&y).unwrap();
        let tail: f64 = sv[2..].iter().map(|s| s * s).sum();
        assert!((res.fit - tail).abs() < 1e-9 * tail.max(1.0));
        assert!(res.converged);
    }

    #[test]
    fn zero_rank_returns_zero() {
        let p = off_diagonal(3).unwrap();
        let m = ObservedMatrix::new(p, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let res = lrma_fixed_rank(&m, 0, &SolverConfig::default()).unwrap();
        assert_eq!(res.fit, 91.0);
        assert_eq!(res.y_hat.max_abs(), 0.0);
    }

    #[test]
    fn example_one_recovers_unique_completion() {
        let (n1, n2, r) = (8, 7, 2);
        let y = low_rank(n1, n2, r, 3);
        let p = example_one_blocks(n1, n2, r).unwrap();
        let m = ObservedMatrix::from_dense(p, &y).unwrap();
        let cfg = SolverConfig::default().with_tol(1e-14);
        let res = lrma_fixed_rank(&m, r, &cfg).unwrap();
        let scale = y.frobenius_norm().powi(2);
        assert!(res.fit < 1e-16 * scale, "fit {}", res.fit);
        assert!(res.y_hat.sub(&y).frobenius_norm() / y.frobenius_norm() < 1e-6);
    }

    #[test]
    fn descent_and_stationarity_on_noisy_data() {
        let (n1, n2, r) = (10, 12, 2);
        let mut rng = substream(4, 1);
        let y = low_rank(n1, n2, r, 4);
        let p = ObservationPattern::from_predicate(n1, n2, |_, _| rng.random::<f64>() < 0.7).unwrap();
        let vals: Vec<f64> = p.entries().iter().map(|&(i, j)| y[(i, j)] + 0.05 * rng.random_range(-1.0..1.0)).collect();
        let m = ObservedMatrix::new(p, vals).unwrap();
        let cfg = SolverConfig {
            tol: 1e-13,
            record_history: true,
            ..SolverConfig::default()
        };
        let res = lrma_fixed_rank(&m, r, &cfg).unwrap();
        assert!(res.converged);
        for w in res.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-300, "{} > {}", w[1], w[0]);
        }
        let s1 = singular_values(&res.y_hat).unwrap()[0];
        let bound = 1e-6 * s1 * res.fit.sqrt();
        assert!(res.optimality_residuals.0 < bound && res.optimality_residuals.1 < bound, "{:?} vs {bound}", res.optimality_residuals);
    }

    #[test]
    fn weighted_path_reduces_weighted_fit() {
        let (n1, n2, r) = (8, 9, 2);
        let mut rng = substream(5, 1);
        let y = low_rank(n1, n2, r, 5);
        let p = ObservationPattern::from_predicate(n1, n2, |_, _| rng.random::<f64>() < 0.8).unwrap();
        let vals: Vec<f64> = p.entries().iter().map(|&(i, j)| y[(i, j)] + 0.1 * rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..p.m()).map(|_| rng.random_range(0.5..4.0)).collect();
        let m = ObservedMatrix::new(p, vals).unwrap();
        let unweighted = lrma_fixed_rank(&m, r, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig::default().with_weights(w.clone()).with_tol(1e-12);
        let weighted = lrma_fixed_rank(&m, r, &cfg).unwrap();
        assert!(weighted.converged);
        assert!(weighted.fit <= m.weighted_fit(&unweighted.y_hat, Some(&w)) + 1e-9);
    }

    #[test]
    fn noiseless_restarts_agree() {
        let (n1, n2, r) = (9, 10, 2);
        let y = low_rank(n1, n2, r, 6);
        let mut rng = substream(6, 1);
        let p = ObservationPattern::from_predicate(n1, n2, |_, _| rng.random::<f64>() < 0.75).unwrap();
        let m = ObservedMatrix::from_dense(p, &y).unwrap();
        let mut fits = Vec::new();
        for seed in 0..5 {
            let cfg = SolverConfig::default().with_tol(1e-15).with_random_init(seed);
            let res = lrma_fixed_rank(&m, r, &cfg).unwrap();
            if res.fit < 1e-12 {
                fits.push(res.y_hat);
            }
        }
        assert!(!fits.is_empty());
        for f in &fits {
            assert!(f.sub(&fits[0]).frobenius_norm() / fits[0].frobenius_norm() < 1e-6);
        }
    }
}
