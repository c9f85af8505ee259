//! Serializable reports produced by the subcommands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    characteristic_rank, wellposedness_check_with, CharRankResult, LowRankFactors, WellPosednessOptions,
    WellPosednessReport,
};
use crate::linalg::DenseMatrix;
use crate::pattern::{estimated_bound, is_reducible, ObservationPattern};
use crate::random::substream;
use crate::solvers::{
    lrma_fixed_rank, nuclear_norm_complete_with, rank_from_singular_values, rank_one_complete, schur_cascade,
    NuclearOptions, ObservedMatrix, SolverConfig,
};
use crate::stats::{sequential_rank_test_with, NoiseModel, RankTestReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub r: usize,
    pub manifold_dim: usize,
    pub f_rm: usize,
    pub df: i64,
}

/// Pattern diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub missing: usize,
    pub row_counts: Vec<usize>,
    pub col_counts: Vec<usize>,
    pub reducible: bool,
    pub component_sizes: Vec<usize>,
    pub row_groups: Vec<Vec<usize>>,
    pub col_groups: Vec<Vec<usize>>,
    pub empty_rows: Vec<usize>,
    pub empty_cols: Vec<usize>,
    pub r_value: f64,
    pub r_ceil: usize,
    /// Bound at the observed fraction `m / (n1·n2)`.
    pub r_hat: f64,
    pub table: Vec<BoundRow>,
}

pub fn analyze_report(p: &ObservationPattern) -> AnalyzeReport {
    let (row_counts, col_counts) = p.row_col_counts();
    let red = is_reducible(p);
    let b = p.bounds();
    let table = (1..=p.n1().min(p.n2()))
        .map(|r| BoundRow {
            r,
            manifold_dim: b.manifold_dim(r),
            f_rm: b.f_rm(r),
            df: b.degrees_of_freedom(r),
        })
        .collect();
    AnalyzeReport {
        n1: p.n1(),
        n2: p.n2(),
        m: p.m(),
        missing: p.complement_len(),
        row_counts,
        col_counts,
        reducible: red.reducible,
        component_sizes: red.components.iter().map(Vec::len).collect(),
        row_groups: red.row_groups.clone(),
        col_groups: red.col_groups.clone(),
        empty_rows: red.empty_rows.clone(),
        empty_cols: red.empty_cols.clone(),
        r_value: b.r_value,
        r_ceil: b.r_ceil,
        r_hat: estimated_bound(p.n1(), p.n2(), p.m() as f64 / (p.n1() * p.n2()) as f64),
        table,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointSource {
    /// Completion supplied by the user.
    Input,
    /// Product of Gaussian factors drawn from stream `u64::MAX` of the seed.
    Random,
}

/// Well-posedness certificate at one point plus the generic verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub rank: usize,
    pub tol: f64,
    pub seed: u64,
    pub trials: usize,
    pub point: PointSource,
    /// Largest `|Y_ij − M_ij|` over Ω when both are given.
    pub max_observed_deviation: Option<f64>,
    pub wellposedness: WellPosednessReport,
    pub characteristic: CharRankResult,
}

/// The point used by `certify` when no completion is supplied.
pub fn random_regular_point(n1: usize, n2: usize, r: usize, seed: u64) -> DenseMatrix {
    LowRankFactors::gaussian(n1, n2, r, &mut substream(seed, u64::MAX)).product()
}

pub fn certify_report(
    p: &ObservationPattern,
    observed: Option<&ObservedMatrix>,
    completion: Option<&DenseMatrix>,
    r: usize,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<CertifyReport> {
    let (n1, n2) = (p.n1(), p.n2());
    if r == 0 || r > n1.min(n2) {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={}", n1.min(n2))));
    }
    let (y, point) = match completion {
        Some(y) => (y.clone(), PointSource::Input),
        None => (random_regular_point(n1, n2, r, seed), PointSource::Random),
    };
    let max_observed_deviation = match (completion, observed) {
        (Some(y), Some(m)) => {
            if y.shape() != m.shape() {
                return Err(Error::DimensionMismatch("completion does not match the input grid".into()));
            }
            Some(
                p.entries()
                    .iter()
                    .zip(&m.values)
                    .map(|(&(i, j), v)| (y[(i, j)] - v).abs())
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };
    let opts = WellPosednessOptions {
        tol,
        force_rank_test: false,
    };
    Ok(CertifyReport {
        rank: r,
        tol,
        seed,
        trials,
        point,
        max_observed_deviation,
        wellposedness: wellposedness_check_with(&y, r, p, &opts)?,
        characteristic: characteristic_rank(p, r, trials, seed)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lrma,
    Nuclear,
    Rank1,
    Schur,
}

/// Result of one completion solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteReport {
    pub method: Method,
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub rank: Option<usize>,
    pub config: SolverConfig,
    pub nuclear: Option<NuclearOptions>,
    /// Singular value fraction used for the reported rank of a nuclear-norm
    /// solution.
    pub threshold: Option<f64>,
    pub threshold_rank: Option<usize>,
    pub max_subset_search: Option<usize>,
    pub y_hat: DenseMatrix,
    /// `Σ_Ω (Ŷ_ij − M_ij)²`.
    pub fit: f64,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub optimality_residuals: Option<(f64, f64)>,
    /// Entries of Ω^c the cascade could not fill (left at zero in `y_hat`).
    pub unfilled: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompleteOptions {
    pub method: Method,
    pub rank: Option<usize>,
    pub config: SolverConfig,
    pub nuclear: NuclearOptions,
    pub threshold: f64,
    pub max_subset_search: usize,
}

pub fn complete_report(m: &ObservedMatrix, opts: &CompleteOptions) -> Result<CompleteReport> {
    let (n1, n2) = m.shape();
    let need_rank = || {
        opts.rank
            .ok_or_else(|| Error::InvalidArgument(format!("--rank is required for method {:?}", opts.method)))
    };
    let mut report = CompleteReport {
        method: opts.method,
        n1,
        n2,
        m: m.pattern.m(),
        rank: opts.rank,
        config: opts.config.clone(),
        nuclear: None,
        threshold: None,
        threshold_rank: None,
        max_subset_search: None,
        y_hat: DenseMatrix::zeros(n1, n2),
        fit: 0.0,
        iterations: None,
        converged: true,
        optimality_residuals: None,
        unfilled: Vec::new(),
    };
    match opts.method {
        Method::Lrma => {
            let res = lrma_fixed_rank(m, need_rank()?, &opts.config)?;
            report.fit = res.fit;
            report.iterations = Some(res.iterations);
            report.converged = res.converged;
            report.optimality_residuals = Some(res.optimality_residuals);
            report.y_hat = res.y_hat;
        }
        Method::Nuclear => {
            let res = nuclear_norm_complete_with(m, &opts.config, &opts.nuclear)?;
            report.nuclear = Some(opts.nuclear);
            report.threshold = Some(opts.threshold);
            report.threshold_rank = Some(rank_from_singular_values(&res.y_hat, opts.threshold)?);
            report.fit = m.weighted_fit(&res.y_hat, None);
            report.iterations = Some(res.iterations);
            report.converged = res.converged;
            report.y_hat = res.y_hat;
        }
        Method::Rank1 => {
            report.rank = Some(1);
            report.y_hat = rank_one_complete(m)?;
            report.fit = m.weighted_fit(&report.y_hat, None);
        }
        Method::Schur => {
            let res = schur_cascade(m, need_rank()?, opts.max_subset_search)?;
            report.max_subset_search = Some(opts.max_subset_search);
            report.iterations = Some(res.passes);
            report.converged = res.complete();
            report.fit = m.weighted_fit(&res.y, None);
            report.y_hat = res.y;
            report.unfilled = res.unfilled;
        }
    }
    Ok(report)
}

/// Sequential rank test with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestCliReport {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub noise: NoiseModel,
    pub config: SolverConfig,
    pub test: RankTestReport,
}

pub fn rank_test_report(
    m: &ObservedMatrix,
    noise: &NoiseModel,
    alpha: f64,
    r_max: Option<usize>,
    cfg: &SolverConfig,
) -> Result<RankTestCliReport> {
    let (n1, n2) = m.shape();
    Ok(RankTestCliReport {
        n1,
        n2,
        m: m.pattern.m(),
        noise: noise.clone(),
        config: cfg.clone(),
        test: sequential_rank_test_with(m, noise, alpha, cfg, r_max)?,
    })
}
