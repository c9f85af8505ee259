//! Weighted least-squares rank tests: the statistic `T_N(r)`, its chi-square
//! reference law, the sequential selection procedure, nested-pattern
//! differences and the noncentrality parameter.

mod distribution;

pub use distribution::{
    chi2_cdf, chi2_quantile, chi2_sf, gamma_p, gamma_q, ks_test, ln_gamma, KsResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::project_tangent;
use crate::linalg::DenseMatrix;
use crate::pattern::{GenericBounds, ObservationPattern};
use crate::solvers::{lrma_fixed_rank, ObservedMatrix, SolverConfig};

/// Per-entry standard deviations, or one shared value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Scalar(f64),
    PerEntry(Vec<f64>),
}

/// Observation model `M_ij = Y*_ij + N^{-1/2} Δ_ij + ε_ij`,
/// `ε_ij ~ N(0, σ_ij²/N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub n: usize,
    pub sigma: Sigma,
    /// Drift per observed entry; `None` means zero.
    pub drift: Option<Vec<f64>>,
}

impl NoiseModel {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        let model = NoiseModel {
            n,
            sigma: Sigma::Scalar(sigma),
            drift: None,
        };
        model.validate(None)?;
        Ok(model)
    }

    pub fn per_entry(n: usize, sigma: Vec<f64>) -> Result<Self> {
        let model = NoiseModel {
            n,
            sigma: Sigma::PerEntry(sigma),
            drift: None,
        };
        model.validate(None)?;
        Ok(model)
    }

    /// Zero noise. Accepted for generating data but not by the test
    /// statistics, whose weights are `1/σ²`.
    pub fn noiseless() -> Self {
        NoiseModel {
            n: 1,
            sigma: Sigma::Scalar(0.0),
            drift: None,
        }
    }

    pub fn with_drift(mut self, drift: Vec<f64>) -> Self {
        self.drift = Some(drift);
        self
    }

    /// Checks positivity and, when `m` is given, the per-entry lengths.
    pub fn validate(&self, m: Option<usize>) -> Result<()> {
        self.check(m, false)
    }

    /// As [`NoiseModel::validate`] but allows `σ = 0`.
    pub fn validate_sampling(&self, m: Option<usize>) -> Result<()> {
        self.check(m, true)
    }

    fn check(&self, m: Option<usize>, allow_zero: bool) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("sample size N must be positive".into()));
        }
        let ok = |s: f64| (s > 0.0 || (allow_zero && s == 0.0)) && s.is_finite();
        match &self.sigma {
            Sigma::Scalar(s) if !ok(*s) => {
                return Err(Error::InvalidArgument(format!("sigma must be positive, got {s}")))
            }
            Sigma::PerEntry(v) => {
                if v.iter().any(|&s| !ok(s)) {
                    return Err(Error::InvalidArgument("every sigma must be positive".into()));
                }
                if m.is_some_and(|m| v.len() != m) {
                    return Err(Error::DimensionMismatch(format!(
                        "{} sigma values for {} observed entries",
                        v.len(),
                        m.unwrap()
                    )));
                }
            }
            _ => {}
        }
        if let (Some(d), Some(m)) = (&self.drift, m) {
            if d.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "{} drift values for {} observed entries",
                    d.len(),
                    m
                )));
            }
        }
        Ok(())
    }

    /// `σ_k` for observed entry `k`.
    pub fn sigma_at(&self, k: usize) -> f64 {
        match &self.sigma {
            Sigma::Scalar(s) => *s,
            Sigma::PerEntry(v) => v[k],
        }
    }

    /// Weights `w_k = 1/σ_k²` for `m` observed entries.
    pub fn weights(&self, m: usize) -> Vec<f64> {
        (0..m).map(|k| self.sigma_at(k).powi(-2)).collect()
    }

    /// The same model restricted to the entries at `keep` (positions in the
    /// original entry list).
    pub fn restrict(&self, keep: &[usize]) -> NoiseModel {
        NoiseModel {
            n: self.n,
            sigma: match &self.sigma {
                Sigma::Scalar(s) => Sigma::Scalar(*s),
                Sigma::PerEntry(v) => Sigma::PerEntry(keep.iter().map(|&k| v[k]).collect()),
            },
            drift: self.drift.as_ref().map(|d| keep.iter().map(|&k| d[k]).collect()),
        }
    }
}

/// `m − r(n1 + n2 − r)`; nonpositive values mean the model is saturated.
pub fn degrees_of_freedom(r: usize, n1: usize, n2: usize, m: usize) -> i64 {
    m as i64 - (r * (n1 + n2 - r)) as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    pub r: usize,
    /// `N · min_Y Σ w_ij (M_ij − Y_ij)²`.
    pub t_n: f64,
    pub df: i64,
    pub converged: bool,
    pub iterations: usize,
    pub y_hat: DenseMatrix,
}

/// `T_N(r)` with weights `1/σ_ij²`, the minimum taken from
/// [`lrma_fixed_rank`].
pub fn test_statistic(
    m: &ObservedMatrix,
    r: usize,
    noise: &NoiseModel,
    cfg: &SolverConfig,
) -> Result<TestStatistic> {
    noise.validate(Some(m.pattern.m()))?;
    let (n1, n2) = m.shape();
    let df = degrees_of_freedom(r, n1, n2, m.pattern.m());
    let cfg = SolverConfig {
        weights: Some(noise.weights(m.pattern.m())),
        ..cfg.clone()
    };
    let res = lrma_fixed_rank(m, r, &cfg)?;
    Ok(TestStatistic {
        r,
        t_n: noise.n as f64 * res.fit,
        df,
        converged: res.converged,
        iterations: res.iterations,
        y_hat: res.y_hat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestRow {
    pub r: usize,
    pub t_n: f64,
    pub df: i64,
    pub p_value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestReport {
    pub rows: Vec<RankTestRow>,
    /// Smallest `r` with `p > alpha`.
    pub selected_rank: Option<usize>,
    pub alpha: f64,
    pub r_max: usize,
    /// `T_N(r)` nonincreasing in `r` up to relative 1e-8.
    pub monotone: bool,
}

/// Tests `r = 1, 2, …` while `df > 0` and `r ≤ ⌈𝕽⌉`, accepting the first
/// rank whose p-value exceeds `alpha`. The scan covers every admissible
/// rank so the full table is reported.
pub fn sequential_rank_test(
    m: &ObservedMatrix,
    noise: &NoiseModel,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<RankTestReport> {
    sequential_rank_test_with(m, noise, alpha, cfg, None)
}

/// As [`sequential_rank_test`] with an explicit upper rank.
pub fn sequential_rank_test_with(
    m: &ObservedMatrix,
    noise: &NoiseModel,
    alpha: f64,
    cfg: &SolverConfig,
    r_max: Option<usize>,
) -> Result<RankTestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let (n1, n2) = m.shape();
    let bounds = GenericBounds::new(n1, n2, m.pattern.m());
    let r_max = r_max.unwrap_or(bounds.r_ceil).min(n1.min(n2));
    let mut rows = Vec::new();
    for r in 1..=r_max {
        let df = degrees_of_freedom(r, n1, n2, m.pattern.m());
        if df <= 0 {
            break;
        }
        let stat = test_statistic(m, r, noise, cfg)?;
        rows.push(RankTestRow {
            r,
            t_n: stat.t_n,
            df,
            p_value: chi2_sf(stat.t_n, df as f64),
            converged: stat.converged,
        });
    }
    let selected_rank = rows.iter().find(|row| row.p_value > alpha).map(|row| row.r);
    let monotone = rows
        .windows(2)
        .all(|w| w[1].t_n <= w[0].t_n * (1.0 + 1e-8) + 1e-12);
    Ok(RankTestReport {
        rows,
        selected_rank,
        alpha,
        r_max,
        monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedResult {
    /// `T_N(r, Ω′) − T_N(r, Ω)`.
    pub delta_t: f64,
    /// `m′ − m`.
    pub delta_df: usize,
    pub t_big: f64,
    pub t_small: f64,
}

/// Difference of test statistics between a pattern `Ω′` and a sub-pattern
/// `Ω ⊂ Ω′`, reusing the values of `m_big` on `Ω`. `noise` refers to the
/// entries of `Ω′`.
pub fn nested_test(
    m_big: &ObservedMatrix,
    sub: &ObservationPattern,
    r: usize,
    noise: &NoiseModel,
    cfg: &SolverConfig,
) -> Result<NestedResult> {
    noise.validate(Some(m_big.pattern.m()))?;
    if sub.n1() != m_big.pattern.n1() || sub.n2() != m_big.pattern.n2() {
        return Err(Error::DimensionMismatch("sub-pattern grid differs".into()));
    }
    let mut keep = Vec::with_capacity(sub.m());
    for &(i, j) in sub.entries() {
        match m_big.pattern.index_of(i, j) {
            Some(k) => keep.push(k),
            None => return Err(Error::NotSubset { row: i, col: j }),
        }
    }
    let small = ObservedMatrix::new(sub.clone(), keep.iter().map(|&k| m_big.values[k]).collect())?;
    let big = test_statistic(m_big, r, noise, cfg)?;
    let t_small = if sub.m() == m_big.pattern.m() {
        big.t_n
    } else {
        test_statistic(&small, r, &noise.restrict(&keep), cfg)?.t_n
    };
    Ok(NestedResult {
        delta_t: big.t_n - t_small,
        delta_df: m_big.pattern.m() - sub.m(),
        t_big: big.t_n,
        t_small,
    })
}

/// `δ_r = min_{H ∈ T(Y*)} Σ_Ω σ_ij⁻² (Δ_ij − H_ij)²`.
pub fn noncentrality(
    y_star: &DenseMatrix,
    r: usize,
    p: &ObservationPattern,
    drift: &[f64],
    noise: &NoiseModel,
) -> Result<f64> {
    noise.validate(Some(p.m()))?;
    let w = noise.weights(p.m());
    Ok(project_tangent(p, drift, y_star, r, Some(&w), 0.0)?.residual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub mean: Vec<f64>,
    /// Unbiased per-entry variance with divisor `N − 1`.
    pub variance: Vec<f64>,
    pub n: usize,
}

impl VarianceEstimate {
    /// Noise model for the averaged data, `σ̂²_ij` as per-entry variance.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::per_entry(self.n, self.variance.iter().map(|v| v.sqrt()).collect())
    }
}

/// Per-entry sample mean and variance from `N ≥ 2` replicates, each a
/// vector over the observed entries.
pub fn estimate_variance(replicates: &[Vec<f64>]) -> Result<VarianceEstimate> {
    let n = replicates.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two replicates".into()));
    }
    let m = replicates[0].len();
    if replicates.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("replicates differ in length".into()));
    }
    let mut mean = vec![0.0; m];
    for rep in replicates {
        for (a, v) in mean.iter_mut().zip(rep) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let mut variance = vec![0.0; m];
    for rep in replicates {
        for k in 0..m {
            variance[k] += (rep[k] - mean[k]).powi(2);
        }
    }
    variance.iter_mut().for_each(|v| *v /= (n - 1) as f64);
    Ok(VarianceEstimate { mean, variance, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproximationGap {
    /// `min_{Y ∈ M_r} Σ w (M − Y)²` from the solver.
    pub solver_min: f64,
    /// `min_{H ∈ T(Y*)} Σ w (M − Y* − H)²`.
    pub tangent_min: f64,
    pub gap: f64,
}

/// Compares the solver minimum with its tangent-space quadratic
/// approximation at the true point `y_star`.
pub fn tangent_approximation_gap(
    m: &ObservedMatrix,
    y_star: &DenseMatrix,
    r: usize,
    noise: &NoiseModel,
    cfg: &SolverConfig,
) -> Result<ApproximationGap> {
    noise.validate(Some(m.pattern.m()))?;
    let w = noise.weights(m.pattern.m());
    let centered: Vec<f64> = m
        .pattern
        .entries()
        .iter()
        .zip(&m.values)
        .map(|(&(i, j), v)| v - y_star[(i, j)])
        .collect();
    let tangent_min = project_tangent(&m.pattern, &centered, y_star, r, Some(&w), 0.0)?.residual;
    let cfg = SolverConfig {
        weights: Some(w),
        init: cfg.init.clone().or_else(|| Some(y_star.clone())),
        ..cfg.clone()
    };
    let solver_min = lrma_fixed_rank(m, r, &cfg)?.fit;
    Ok(ApproximationGap {
        solver_min,
        tangent_min,
        gap: (solver_min - tangent_min).abs(),
    })
}

/// Sample mean and Pearson correlation helpers for Monte Carlo summaries.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
