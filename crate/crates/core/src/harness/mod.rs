//! Random instances and the Monte Carlo experiment suite.

mod experiments;
mod wilson;

pub use experiments::{
    mse_compare, qq_data, qq_nested, rank_selection_compare, wellposed_probability, McConfig,
};
pub use wilson::{wilson_fixture, wilson_reproduction, WilsonFixture, WilsonReport};

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::format_sig;
use crate::geometry::wellposedness_check;
use crate::linalg::{orthonormalize, DenseMatrix};
use crate::pattern::{is_reducible, ObservationPattern};
use crate::random::{gaussian_matrix, standard_normal, substream};
use crate::solvers::ObservedMatrix;
use crate::stats::NoiseModel;

/// Per-entry Bernoulli sampling or a uniformly drawn set of fixed size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Probability(f64),
    Cardinality(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n1: usize,
    pub n2: usize,
    pub r_true: usize,
    pub sampling: Sampling,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Multiplies the diagonal of `D`; `None` means `√(n1·n2)`, which makes
    /// the entries of `Y*` of order one.
    pub signal_scale: Option<f64>,
}

impl InstanceSpec {
    pub fn new(n1: usize, n2: usize, r_true: usize, sampling: Sampling, noise: NoiseModel, seed: u64) -> Self {
        InstanceSpec {
            n1,
            n2,
            r_true,
            sampling,
            noise,
            seed,
            signal_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_true > self.n1.min(self.n2) {
            return Err(Error::InvalidArgument(format!(
                "true rank {} exceeds min({}, {})",
                self.r_true, self.n1, self.n2
            )));
        }
        match self.sampling {
            Sampling::Probability(p) if !(p > 0.0 && p <= 1.0) => {
                Err(Error::InvalidArgument(format!("sampling probability {p} outside (0, 1]")))
            }
            Sampling::Cardinality(m) if m == 0 || m > self.n1 * self.n2 => {
                Err(Error::InvalidArgument(format!("cardinality {m} outside 1..={}", self.n1 * self.n2)))
            }
            _ => self.noise.validate_sampling(None),
        }
    }

    pub fn scale(&self) -> f64 {
        self.signal_scale.unwrap_or(((self.n1 * self.n2) as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub y_star: DenseMatrix,
    pub observed: ObservedMatrix,
    /// Some row or column of the sampled pattern is empty.
    pub empty_lines: bool,
}

/// `Ṽ D W̃ᵀ` with orthonormalized Gaussian factors and `D` uniform on
/// `[1, 2]·scale`.
pub fn random_truth<R: Rng + ?Sized>(n1: usize, n2: usize, r: usize, scale: f64, rng: &mut R) -> Result<DenseMatrix> {
    if r == 0 {
        return Ok(DenseMatrix::zeros(n1, n2));
    }
    let v = orthonormalize(&gaussian_matrix(n1, r, rng))?;
    let w = orthonormalize(&gaussian_matrix(n2, r, rng))?;
    let d: Vec<f64> = (0..r).map(|_| scale * rng.random_range(1.0..=2.0)).collect();
    Ok(v.matmul(&DenseMatrix::diag(&d)).matmul(&w.transpose()))
}

pub fn random_pattern<R: Rng + ?Sized>(n1: usize, n2: usize, sampling: Sampling, rng: &mut R) -> Result<ObservationPattern> {
    match sampling {
        Sampling::Probability(p) => ObservationPattern::from_predicate(n1, n2, |_, _| rng.random::<f64>() < p),
        Sampling::Cardinality(m) => {
            let cells = sample(rng, n1 * n2, m);
            ObservationPattern::new(n1, n2, cells.into_iter().map(|c| (c / n2, c % n2)))
        }
    }
}

/// `M = P_Ω(Y* + Δ/√N + ε)` with `ε_ij ~ N(0, σ_ij²/N)`.
pub fn observe<R: Rng + ?Sized>(
    y_star: &DenseMatrix,
    pattern: &ObservationPattern,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ObservedMatrix> {
    noise.validate_sampling(Some(pattern.m()))?;
    let root_n = (noise.n as f64).sqrt();
    let values = pattern
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let drift = noise.drift.as_ref().map_or(0.0, |d| d[k]);
            let eps = noise.sigma_at(k) / root_n * standard_normal(rng);
            y_star[(i, j)] + drift / root_n + eps
        })
        .collect();
    ObservedMatrix::new(pattern.clone(), values)
}

/// Truth from substream 0, pattern from 1, noise from 2 of `spec.seed`.
pub fn gen_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let y_star = random_truth(spec.n1, spec.n2, spec.r_true, spec.scale(), &mut substream(spec.seed, 0))?;
    let pattern = random_pattern(spec.n1, spec.n2, spec.sampling, &mut substream(spec.seed, 1))?;
    let empty_lines = is_reducible(&pattern).has_empty_lines();
    let observed = observe(&y_star, &pattern, &spec.noise, &mut substream(spec.seed, 2))?;
    Ok(Instance {
        y_star,
        observed,
        empty_lines,
    })
}

/// Redraws the pattern (substreams `1 + 1000·k`) until `Y*` is well-posed at
/// `r`, giving up after `max_draws`.
pub fn gen_wellposed_instance(spec: &InstanceSpec, r: usize, max_draws: usize) -> Result<Instance> {
    spec.validate()?;
    let y_star = random_truth(spec.n1, spec.n2, spec.r_true, spec.scale(), &mut substream(spec.seed, 0))?;
    for k in 0..max_draws as u64 {
        let pattern = match random_pattern(spec.n1, spec.n2, spec.sampling, &mut substream(spec.seed, 1 + 1000 * k)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        if wellposedness_check(&y_star, r, &pattern, 0.0)?.well_posed {
            let empty_lines = is_reducible(&pattern).has_empty_lines();
            let observed = observe(&y_star, &pattern, &spec.noise, &mut substream(spec.seed, 2))?;
            return Ok(Instance {
                y_star,
                observed,
                empty_lines,
            });
        }
    }
    Err(Error::SamplingExhausted { attempts: max_draws })
}

/// Seed for replication `index` of an experiment keyed by `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    /// One value per grid cell, first axis slowest.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub grid: Vec<GridAxis>,
    pub series: Vec<Series>,
    pub replications: usize,
    pub seed: u64,
    /// Scalar summaries, tolerances and settings.
    pub params: BTreeMap<String, f64>,
}

impl ExperimentResult {
    pub fn cells(&self) -> usize {
        self.grid.iter().map(|a| a.values.len()).product()
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    /// Grid coordinates of cell `c`.
    pub fn coordinates(&self, mut c: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (a, axis) in self.grid.iter().enumerate().rev() {
            let len = axis.values.len();
            out[a] = axis.values[c % len];
            c /= len;
        }
        out
    }

    pub fn is_consistent(&self) -> bool {
        let cells = self.cells();
        self.series.iter().all(|s| s.values.len() == cells)
    }

    /// One row per grid cell: axes, series, replications.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self.grid.iter().map(|a| a.name.as_str()).collect();
        header.extend(self.series.iter().map(|s| s.name.as_str()));
        header.push("reps");
        out.push_str(&header.join(","));
        out.push('\n');
        for c in 0..self.cells() {
            let mut row: Vec<String> = self.coordinates(c).into_iter().map(format_sig).collect();
            row.extend(self.series.iter().map(|s| format_sig(s.values[c])));
            row.push(self.replications.to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank_relative;

    fn spec(seed: u64, sampling: Sampling, sigma: f64) -> InstanceSpec {
        let noise = if sigma == 0.0 {
            NoiseModel::noiseless()
        } else {
            NoiseModel::new(100, sigma).unwrap()
        };
        InstanceSpec::new(12, 15, 3, sampling, noise, seed)
    }

    #[test]
    fn truth_has_requested_rank() {
        for seed in 0..100 {
            let mut rng = substream(seed, 0);
            let r = 1 + (seed as usize % 6);
            let y = random_truth(9, 11, r, 1.0, &mut rng).unwrap();
            assert_eq!(numerical_rank_relative(&y, 1e-9).unwrap(), r);
        }
    }

    #[test]
    fn deterministic_and_noiseless() {
        let s = spec(3, Sampling::Probability(0.6), 0.0);
        let a = gen_instance(&s).unwrap();
        let b = gen_instance(&s).unwrap();
        assert_eq!(a, b);
        for (&(i, j), v) in a.observed.pattern.entries().iter().zip(&a.observed.values) {
            assert!((v - a.y_star[(i, j)]).abs() < 1e-200_f64.max(a.y_star[(i, j)].abs() * 1e-15));
        }
    }

    #[test]
    fn cardinality_and_fraction() {
        let s = spec(4, Sampling::Cardinality(100), 1.0);
        assert_eq!(gen_instance(&s).unwrap().observed.pattern.m(), 100);
        let mut rng = substream(5, 0);
        let p = random_pattern(100, 100, Sampling::Probability(0.3), &mut rng).unwrap();
        let se = (0.3 * 0.7 / 1e4f64).sqrt();
        assert!((p.m() as f64 / 1e4 - 0.3).abs() < 3.0 * se);
    }

    #[test]
    fn wellposed_resampling() {
        let s = spec(6, Sampling::Probability(0.7), 1.0);
        let inst = gen_wellposed_instance(&s, 3, 100).unwrap();
        assert!(wellposedness_check(&inst.y_star, 3, &inst.observed.pattern, 0.0).unwrap().well_posed);
        let hopeless = InstanceSpec::new(6, 6, 5, Sampling::Cardinality(20), s.noise.clone(), 1);
        assert!(matches!(
            gen_wellposed_instance(&hopeless, 5, 3),
            Err(Error::SamplingExhausted { attempts: 3 })
        ));
    }

    #[test]
    fn csv_layout() {
        let res = ExperimentResult {
            name: "t".into(),
            grid: vec![
                GridAxis { name: "r".into(), values: vec![1.0, 2.0] },
                GridAxis { name: "p".into(), values: vec![0.4, 0.6, 0.8] },
            ],
            series: vec![Series { name: "x".into(), values: (0..6).map(|v| v as f64).collect() }],
            replications: 5,
            seed: 0,
            params: BTreeMap::new(),
        };
        assert!(res.is_consistent());
        assert_eq!(res.coordinates(4), vec![2.0, 0.6]);
        let csv = res.to_csv();
        assert_eq!(csv.lines().next(), Some("r,p,x,reps"));
        assert_eq!(csv.lines().nth(5), Some("2,0.6,4,5"));
    }
}
