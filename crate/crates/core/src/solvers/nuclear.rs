use serde::{Deserialize, Serialize};

use super::{optimality_residual, ObservedMatrix, SolveResult, SolverConfig};
use crate::error::Result;
use crate::linalg::{svd, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NuclearAlgorithm {
    /// Alternating directions on `min ‖Z‖_*` s.t. `Z = X`, `P_Ω(X) = M`;
    /// solves the equality-constrained problem exactly.
    #[default]
    Admm,
    /// Cai–Candès–Shen singular value thresholding; solves the regularized
    /// problem `min τ‖Y‖_* + ½‖Y‖_F²` s.t. `P_Ω(Y) = M`.
    Svt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NuclearOptions {
    pub algorithm: NuclearAlgorithm,
    /// SVT threshold; default `5·√(n1·n2)·mean|M_ij|`.
    pub tau: Option<f64>,
    /// SVT step; default `1.2·n1·n2/m`.
    pub delta: Option<f64>,
    /// Initial ADMM penalty; default `10/σ₁(P_Ω(M))`.
    pub rho: Option<f64>,
}

/// Soft-thresholds the singular values of `a` by `t`.
fn shrink(a: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    let mut s = svd(a)?;
    for v in s.singular_values.iter_mut() {
        *v = (*v - t).max(0.0);
    }
    Ok(s.reconstruct())
}

fn constraint_violation(y: &DenseMatrix, m: &ObservedMatrix) -> f64 {
    let norm = m.norm();
    let err = m.weighted_fit(y, None).sqrt();
    if norm > 0.0 {
        err / norm
    } else {
        err
    }
}

/// Minimum nuclear norm completion with the default algorithm.
pub fn nuclear_norm_complete(m: &ObservedMatrix, cfg: &SolverConfig) -> Result<SolveResult> {
    nuclear_norm_complete_with(m, cfg, &NuclearOptions::default())
}

/// Minimum nuclear norm completion. `fit` in the result is the relative
/// constraint violation `‖P_Ω(Ŷ) − M‖_F / ‖M‖_F`.
pub fn nuclear_norm_complete_with(
    m: &ObservedMatrix,
    cfg: &SolverConfig,
    opts: &NuclearOptions,
) -> Result<SolveResult> {
    cfg.validate(m)?;
    let (y_hat, iterations, converged, history) = match opts.algorithm {
        NuclearAlgorithm::Admm => admm(m, cfg, opts)?,
        NuclearAlgorithm::Svt => svt(m, cfg, opts)?,
    };
    Ok(SolveResult {
        fit: constraint_violation(&y_hat, m),
        optimality_residuals: optimality_residual(&y_hat, m),
        y_hat,
        iterations,
        converged,
        history,
    })
}

type Iterate = (DenseMatrix, usize, bool, Vec<f64>);

fn project_feasible(x: &mut DenseMatrix, m: &ObservedMatrix) {
    for (&(i, j), &v) in m.pattern.entries().iter().zip(&m.values) {
        x[(i, j)] = v;
    }
}

fn admm(m: &ObservedMatrix, cfg: &SolverConfig, opts: &NuclearOptions) -> Result<Iterate> {
    let mut x = match &cfg.init {
        Some(y0) => {
            let mut x = y0.clone();
            project_feasible(&mut x, m);
            x
        }
        None => m.zero_filled(),
    };
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let s1 = svd(&m.zero_filled())?.largest();
    let mut rho = opts.rho.unwrap_or(if s1 > 0.0 { 10.0 / s1 } else { 1.0 });
    let mut u = DenseMatrix::zeros(x.rows(), x.cols());
    let mut z = x.clone();
    let mut history = Vec::new();
    for it in 1..=cfg.max_iter {
        z = shrink(&x.add(&u), 1.0 / rho)?;
        let mut x_next = z.sub(&u);
        project_feasible(&mut x_next, m);
        let primal = x_next.sub(&z).frobenius_norm();
        let dual = rho * x_next.sub(&x).frobenius_norm();
        u = u.add(&x_next).sub(&z);
        x = x_next;
        if cfg.record_history {
            history.push(primal / scale);
        }
        if primal / scale < cfg.tol && dual / (rho * scale) < cfg.tol {
            return Ok((z, it, true, history));
        }
        // Residual balancing; the scaled dual variable rescales with ρ.
        if primal > 10.0 * dual {
            rho *= 2.0;
            u = u.scale(0.5);
        } else if dual > 10.0 * primal {
            rho *= 0.5;
            u = u.scale(2.0);
        }
    }
    Ok((z, cfg.max_iter, false, history))
}

fn svt(m: &ObservedMatrix, cfg: &SolverConfig, opts: &NuclearOptions) -> Result<Iterate> {
    let (n1, n2) = m.shape();
    let count = m.pattern.m() as f64;
    let mean_abs = m.values.iter().map(|v| v.abs()).sum::<f64>() / count;
    let tau = opts.tau.unwrap_or(5.0 * ((n1 * n2) as f64).sqrt() * mean_abs);
    let delta = opts.delta.unwrap_or(1.2 * (n1 * n2) as f64 / count);
    let pm = m.zero_filled();
    let norm2 = svd(&pm)?.largest();
    let k0 = if norm2 > 0.0 { (tau / (delta * norm2)).ceil() } else { 0.0 };
    let mut dual = pm.scale(k0 * delta);
    let mut y = DenseMatrix::zeros(n1, n2);
    let mut history = Vec::new();
    for it in 1..=cfg.max_iter {
        y = shrink(&dual, tau)?;
        let violation = constraint_violation(&y, m);
        if cfg.record_history {
            history.push(violation);
        }
        if violation < cfg.tol {
            return Ok((y, it, true, history));
        }
        for (&(i, j), &v) in m.pattern.entries().iter().zip(&m.values) {
            dual[(i, j)] += delta * (v - y[(i, j)]);
        }
    }
    Ok((y, cfg.max_iter, false, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{nuclear_norm, singular_values};
    use crate::pattern::ObservationPattern;
    use crate::random::{gaussian_matrix, substream};
    use rand::Rng;

    fn corner_missing() -> ObservedMatrix {
        let p = ObservationPattern::new(2, 2, vec![(0, 1), (1, 0), (1, 1)]).unwrap();
        ObservedMatrix::new(p, vec![1.0; 3]).unwrap()
    }

    #[test]
    fn full_observation_returns_data() {
        let y = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 5.0);
        let m = ObservedMatrix::from_dense(ObservationPattern::full(3, 4).unwrap(), &y).unwrap();
        let res = nuclear_norm_complete(&m, &SolverConfig::default().with_tol(1e-10)).unwrap();
        assert!(res.converged);
        assert!(res.y_hat.sub(&y).max_abs() < 1e-8 * y.max_abs());
    }

    #[test]
    fn two_by_two_corner() {
        let res = nuclear_norm_complete(&corner_missing(), &SolverConfig::default().with_tol(1e-10)).unwrap();
        assert!(res.converged);
        assert!((res.y_hat[(0, 0)] - 1.0).abs() < 1e-4, "{:?}", res.y_hat);
        assert!((nuclear_norm(&res.y_hat).unwrap() - 2.0).abs() < 1e-4);
    }

    #[test]
    fn classic_svt_has_shrinkage_bias() {
        // With finite τ the regularized solution is y = τ/(τ+2).
        let opts = NuclearOptions {
            algorithm: NuclearAlgorithm::Svt,
            tau: Some(10.0),
            delta: Some(1.0),
            ..Default::default()
        };
        let cfg = SolverConfig::default().with_tol(1e-9).with_max_iter(20_000);
        let res = nuclear_norm_complete_with(&corner_missing(), &cfg, &opts).unwrap();
        assert!(res.converged);
        assert!((res.y_hat[(0, 0)] - 10.0 / 12.0).abs() < 1e-3, "{}", res.y_hat[(0, 0)]);
    }

    #[test]
    fn feasible_and_not_above_zero_fill() {
        let mut rng = substream(3, 0);
        let y = gaussian_matrix(8, 2, &mut rng).matmul(&gaussian_matrix(2, 9, &mut rng));
        let p = ObservationPattern::from_predicate(8, 9, |_, _| rng.random::<f64>() < 0.6).unwrap();
        let m = ObservedMatrix::from_dense(p, &y).unwrap();
        let tol = 1e-8;
        let res = nuclear_norm_complete(&m, &SolverConfig::default().with_tol(tol)).unwrap();
        assert!(res.converged);
        assert!(res.fit < tol);
        let bound = nuclear_norm(&m.zero_filled()).unwrap();
        assert!(nuclear_norm(&res.y_hat).unwrap() <= bound + tol * bound);
        assert!(singular_values(&res.y_hat).unwrap()[0] > 0.0);
    }
}
