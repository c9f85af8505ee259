use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    derive_seed, gen_instance, gen_wellposed_instance, observe, random_pattern, random_truth,
    ExperimentResult, GridAxis, InstanceSpec, Sampling, Series,
};
use crate::error::{Error, Result};
use crate::geometry::{wellposedness_check, DEFAULT_RANK_TOL};
use crate::pattern::{estimated_bound, ObservationPattern};
use crate::random::substream;
use crate::solvers::{
    lrma_fixed_rank, nuclear_norm_complete_with, rank_from_singular_values, NuclearOptions,
    SolverConfig,
};
use crate::stats::{
    chi2_cdf, chi2_quantile, correlation, ks_test, mean, nested_test, sequential_rank_test,
    test_statistic, NoiseModel,
};

/// Solver settings shared by the Monte Carlo experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub solver: SolverConfig,
    pub nuclear_solver: SolverConfig,
    pub nuclear: NuclearOptions,
    /// Pattern redraws allowed when a well-posed instance is required.
    pub max_draws: usize,
    pub alpha: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            solver: SolverConfig::default().with_tol(1e-10).with_max_iter(20_000),
            nuclear_solver: SolverConfig::default().with_tol(1e-7).with_max_iter(20_000),
            nuclear: NuclearOptions::default(),
            max_draws: 100,
            alpha: 0.05,
        }
    }
}

fn axis(name: &str, values: impl IntoIterator<Item = f64>) -> GridAxis {
    GridAxis {
        name: name.into(),
        values: values.into_iter().collect(),
    }
}

fn series(name: impl Into<String>, values: Vec<f64>) -> Series {
    Series {
        name: name.into(),
        values,
    }
}

fn cell_seed(seed: u64, cell: usize, rep: usize) -> u64 {
    derive_seed(seed, ((cell as u64) << 32) | rep as u64)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fraction of Bernoulli(p) patterns at which a random rank-`r` truth with
/// orthonormal factors is well-posed, per `(r, p)` cell.
pub fn wellposed_probability(
    n1: usize,
    n2: usize,
    r_list: &[usize],
    p_list: &[f64],
    reps: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    let mut fraction = Vec::new();
    let mut r_hat = Vec::new();
    for (ri, &r) in r_list.iter().enumerate() {
        for (pi, &p) in p_list.iter().enumerate() {
            let cell = ri * p_list.len() + pi;
            let hits = (0..reps)
                .into_par_iter()
                .map(|k| -> Result<bool> {
                    let s = cell_seed(seed, cell, k);
                    let y = random_truth(n1, n2, r, 1.0, &mut substream(s, 0))?;
                    match random_pattern(n1, n2, Sampling::Probability(p), &mut substream(s, 1)) {
                        Ok(pat) => Ok(wellposedness_check(&y, r, &pat, 0.0)?.well_posed),
                        Err(Error::InvalidPattern(_)) => Ok(false),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<bool>>>()?;
            fraction.push(hits.iter().filter(|&&h| h).count() as f64 / reps as f64);
            r_hat.push(estimated_bound(n1, n2, p));
        }
    }
    Ok(ExperimentResult {
        name: "wellposed-probability".into(),
        grid: vec![
            axis("r", r_list.iter().map(|&r| r as f64)),
            axis("p", p_list.iter().copied()),
        ],
        series: vec![series("fraction", fraction), series("r_hat", r_hat)],
        replications: reps,
        seed,
        params: BTreeMap::from([
            ("n1".into(), n1 as f64),
            ("n2".into(), n2 as f64),
            ("rank_tol".into(), DEFAULT_RANK_TOL),
        ]),
    })
}

/// Mean squared error of the rank-`r` least-squares fit and of nuclear-norm
/// minimization against the truth, per `(r, p)` cell.
#[allow(clippy::too_many_arguments)]
pub fn mse_compare(
    n1: usize,
    n2: usize,
    r_list: &[usize],
    p_list: &[f64],
    noise: &NoiseModel,
    reps: usize,
    seed: u64,
    cfg: &McConfig,
) -> Result<ExperimentResult> {
    let mut lrma = Vec::new();
    let mut nuclear = Vec::new();
    let mut r_hat = Vec::new();
    let cells = (n1 * n2) as f64;
    for (ri, &r) in r_list.iter().enumerate() {
        for (pi, &p) in p_list.iter().enumerate() {
            let cell = ri * p_list.len() + pi;
            let errs = (0..reps)
                .into_par_iter()
                .map(|k| -> Result<(f64, f64)> {
                    let spec = InstanceSpec::new(n1, n2, r, Sampling::Probability(p), noise.clone(), cell_seed(seed, cell, k));
                    let inst = gen_instance(&spec)?;
                    let a = lrma_fixed_rank(&inst.observed, r, &cfg.solver)?.y_hat;
                    let b = nuclear_norm_complete_with(&inst.observed, &cfg.nuclear_solver, &cfg.nuclear)?.y_hat;
                    Ok((
                        a.sub(&inst.y_star).frobenius_norm().powi(2),
                        b.sub(&inst.y_star).frobenius_norm().powi(2),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let denom = cells * reps as f64;
            lrma.push(errs.iter().map(|e| e.0).sum::<f64>() / denom);
            nuclear.push(errs.iter().map(|e| e.1).sum::<f64>() / denom);
            r_hat.push(estimated_bound(n1, n2, p));
        }
    }
    let diff = lrma.iter().zip(&nuclear).map(|(a, b)| a - b).collect();
    Ok(ExperimentResult {
        name: "mse-compare".into(),
        grid: vec![
            axis("r", r_list.iter().map(|&r| r as f64)),
            axis("p", p_list.iter().copied()),
        ],
        series: vec![
            series("mse_lrma", lrma),
            series("mse_nuclear", nuclear),
            series("mse_diff", diff),
            series("r_hat", r_hat),
        ],
        replications: reps,
        seed,
        params: BTreeMap::from([
            ("n1".into(), n1 as f64),
            ("n2".into(), n2 as f64),
            ("sigma".into(), noise.sigma_at(0)),
            ("sample_size".into(), noise.n as f64),
            ("lrma_tol".into(), cfg.solver.tol),
            ("nuclear_tol".into(), cfg.nuclear_solver.tol),
        ]),
    })
}

/// Sorted statistics against chi-square quantiles at `(k − 0.5)/reps`,
/// plus the statistics in replication order.
fn qq_result(name: &str, stats: Vec<f64>, df: f64, seed: u64, mut params: BTreeMap<String, f64>, extra: Vec<Series>) -> ExperimentResult {
    let reps = stats.len();
    let mut sorted = stats.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let quantiles = (1..=reps).map(|k| chi2_quantile((k as f64 - 0.5) / reps as f64, df)).collect();
    let ks = ks_test(&stats, |x| chi2_cdf(x.max(0.0), df));
    params.insert("df".into(), df);
    params.insert("ks_statistic".into(), ks.statistic);
    params.insert("ks_p_value".into(), ks.p_value);
    params.insert("mean".into(), mean(&stats));
    let mut all = vec![
        series("statistic", stats),
        series("sorted", sorted),
        series("chi2_quantile", quantiles),
    ];
    all.extend(extra);
    ExperimentResult {
        name: name.into(),
        grid: vec![axis("k", (1..=reps).map(|k| k as f64))],
        series: all,
        replications: reps,
        seed,
        params,
    }
}

fn spec_params(spec: &InstanceSpec, r: usize, m: usize, cfg: &McConfig) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("n1".into(), spec.n1 as f64),
        ("n2".into(), spec.n2 as f64),
        ("r".into(), r as f64),
        ("m".into(), m as f64),
        ("sigma".into(), spec.noise.sigma_at(0)),
        ("sample_size".into(), spec.noise.n as f64),
        ("signal_scale".into(), spec.scale()),
        ("solver_tol".into(), cfg.solver.tol),
        ("solver_max_iter".into(), cfg.solver.max_iter as f64),
    ])
}

/// `T_N(r)` over `reps` noise draws on one well-posed `(Y*, Ω)`.
pub fn qq_data(spec: &InstanceSpec, r: usize, reps: usize, cfg: &McConfig) -> Result<ExperimentResult> {
    let inst = gen_wellposed_instance(spec, r, cfg.max_draws)?;
    let pattern = inst.observed.pattern.clone();
    let df = crate::stats::degrees_of_freedom(r, spec.n1, spec.n2, pattern.m());
    if df <= 0 {
        return Err(Error::InvalidArgument(format!("degrees of freedom {df} are not positive")));
    }
    let stats = (0..reps)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = substream(derive_seed(spec.seed, 1 << 40 | k as u64), 2);
            let m = observe(&inst.y_star, &pattern, &spec.noise, &mut rng)?;
            Ok(test_statistic(&m, r, &spec.noise, &cfg.solver)?.t_n)
        })
        .collect::<Result<Vec<_>>>()?;
    let params = spec_params(spec, r, pattern.m(), cfg);
    Ok(qq_result("qq", stats, df as f64, spec.seed, params, Vec::new()))
}

/// Nested variant: `Ω ⊂ Ω′` with `removed` fewer entries, both well-posed;
/// records `T_N(r, Ω′) − T_N(r, Ω)` and `T_N(r, Ω)` per replication.
pub fn qq_nested(spec: &InstanceSpec, removed: usize, r: usize, reps: usize, cfg: &McConfig) -> Result<ExperimentResult> {
    let inst = gen_wellposed_instance(spec, r, cfg.max_draws)?;
    let big = inst.observed.pattern.clone();
    if removed == 0 || removed >= big.m() {
        return Err(Error::InvalidArgument(format!("cannot remove {removed} of {} entries", big.m())));
    }
    let mut sub: Option<ObservationPattern> = None;
    for k in 0..cfg.max_draws as u64 {
        let mut rng = substream(spec.seed, 7 + 1000 * k);
        let drop = rand::seq::index::sample(&mut rng, big.m(), removed).into_vec();
        let kept = big.entries().iter().enumerate().filter(|(t, _)| !drop.contains(t)).map(|(_, &e)| e);
        let candidate = ObservationPattern::new(big.n1(), big.n2(), kept)?;
        if wellposedness_check(&inst.y_star, r, &candidate, 0.0)?.well_posed {
            sub = Some(candidate);
            break;
        }
    }
    let sub = sub.ok_or(Error::SamplingExhausted { attempts: cfg.max_draws })?;
    let pairs = (0..reps)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let mut rng = substream(derive_seed(spec.seed, 1 << 40 | k as u64), 2);
            let m = observe(&inst.y_star, &big, &spec.noise, &mut rng)?;
            let res = nested_test(&m, &sub, r, &spec.noise, &cfg.solver)?;
            Ok((res.delta_t, res.t_small))
        })
        .collect::<Result<Vec<_>>>()?;
    let delta: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let small: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut params = spec_params(spec, r, big.m(), cfg);
    params.insert("m_sub".into(), sub.m() as f64);
    params.insert("correlation".into(), correlation(&delta, &small));
    Ok(qq_result(
        "qq-nested",
        delta,
        removed as f64,
        spec.seed,
        params,
        vec![series("t_small", small)],
    ))
}

/// Rank selection by the sequential chi-square test and by the singular
/// value fraction rule on the nuclear-norm solution, per true rank.
#[allow(clippy::too_many_arguments)]
pub fn rank_selection_compare(
    n1: usize,
    n2: usize,
    r_list: &[usize],
    sampling: Sampling,
    noise: &NoiseModel,
    reps: usize,
    thresholds: &[f64],
    seed: u64,
    cfg: &McConfig,
) -> Result<ExperimentResult> {
    let mut seq_err = Vec::new();
    let mut seq_exact = Vec::new();
    let mut below_rejected = Vec::new();
    let mut thr_err: Vec<Vec<f64>> = vec![Vec::new(); thresholds.len()];
    for (cell, &r) in r_list.iter().enumerate() {
        let outcomes = (0..reps)
            .into_par_iter()
            .map(|k| -> Result<(f64, bool, Vec<f64>)> {
                let spec = InstanceSpec::new(n1, n2, r, sampling, noise.clone(), cell_seed(seed, cell, k));
                let inst = gen_wellposed_instance(&spec, r, cfg.max_draws)?;
                let report = sequential_rank_test(&inst.observed, noise, cfg.alpha, &cfg.solver)?;
                let chosen = report.selected_rank.unwrap_or(report.r_max + 1);
                let rejected = report.rows.iter().filter(|row| row.r < r).all(|row| row.p_value < 0.01);
                if thresholds.is_empty() {
                    return Ok(((chosen as f64 - r as f64).abs(), rejected, Vec::new()));
                }
                let y = nuclear_norm_complete_with(&inst.observed, &cfg.nuclear_solver, &cfg.nuclear)?.y_hat;
                let thr = thresholds
                    .iter()
                    .map(|&b| Ok((rank_from_singular_values(&y, b)? as f64 - r as f64).abs()))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(((chosen as f64 - r as f64).abs(), rejected, thr))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut errs: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
        seq_exact.push(errs.iter().filter(|&&e| e == 0.0).count() as f64 / reps as f64);
        seq_err.push(median(&mut errs));
        below_rejected.push(outcomes.iter().filter(|o| o.1).count() as f64 / reps as f64);
        for (t, col) in thr_err.iter_mut().enumerate() {
            let mut e: Vec<f64> = outcomes.iter().map(|o| o.2[t]).collect();
            col.push(median(&mut e));
        }
    }
    let mut all = vec![
        series("median_err_sequential", seq_err),
        series("exact_fraction_sequential", seq_exact),
        series("lower_ranks_rejected_fraction", below_rejected),
    ];
    for (b, col) in thresholds.iter().zip(thr_err) {
        all.push(series(format!("median_err_threshold_{b}"), col));
    }
    let mut params = BTreeMap::from([
        ("n1".into(), n1 as f64),
        ("n2".into(), n2 as f64),
        ("alpha".into(), cfg.alpha),
        ("sigma".into(), noise.sigma_at(0)),
        ("sample_size".into(), noise.n as f64),
        ("solver_tol".into(), cfg.solver.tol),
        ("nuclear_tol".into(), cfg.nuclear_solver.tol),
    ]);
    match sampling {
        Sampling::Probability(p) => params.insert("p".into(), p),
        Sampling::Cardinality(m) => params.insert("m".into(), m as f64),
    };
    Ok(ExperimentResult {
        name: "rank-selection".into(),
        grid: vec![axis("r_true", r_list.iter().map(|&r| r as f64))],
        series: all,
        replications: reps,
        seed,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wellposed_probability_edges() {
        let res = wellposed_probability(8, 9, &[1, 2, 7], &[0.5, 1.0], 6, 3).unwrap();
        assert!(res.is_consistent());
        let f = res.series("fraction").unwrap();
        // r = 7 at p = 0.5 fails the dimension count; p = 1 is vacuous.
        assert_eq!(f[4], 0.0);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[3], 1.0);
        assert_eq!(f[5], 1.0);
        let again = wellposed_probability(8, 9, &[1, 2, 7], &[0.5, 1.0], 6, 3).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn noiseless_mse_small() {
        let noise = NoiseModel::noiseless();
        let res = mse_compare(10, 12, &[1], &[0.8], &noise, 3, 1, &McConfig::default()).unwrap();
        assert!(res.series("mse_lrma").unwrap()[0] < 1e-10);
    }

    #[test]
    fn qq_shapes() {
        let noise = NoiseModel::new(100, 5.0).unwrap();
        let spec = InstanceSpec::new(8, 9, 2, Sampling::Cardinality(50), noise, 4);
        let res = qq_data(&spec, 2, 12, &McConfig::default()).unwrap();
        assert_eq!(res.series("sorted").unwrap().len(), 12);
        assert!(res.series("sorted").unwrap().windows(2).all(|w| w[0] <= w[1]));
        assert!(res.series("chi2_quantile").unwrap().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(res.params["df"], 50.0 - 2.0 * 15.0);
        let nested = qq_nested(&spec, 3, 2, 6, &McConfig::default()).unwrap();
        assert_eq!(nested.params["df"], 3.0);
        assert!(nested.is_consistent());
    }

    #[test]
    fn single_cell_rank_selection() {
        let noise = NoiseModel::new(100, 1e-6).unwrap();
        let res = rank_selection_compare(8, 9, &[2], Sampling::Probability(0.8), &noise, 1, &[0.9], 5, &McConfig::default()).unwrap();
        assert!(res.is_consistent());
        assert_eq!(res.series("median_err_sequential").unwrap(), &[0.0]);
    }
}
