//! Command-line front end.
//!
//! Every subcommand builds a serializable report from library calls and
//! renders it as CSV (numbers with 9 significant digits, settings in `#`
//! comment lines) or pretty JSON (full precision).

mod reports;

pub use reports::{
    analyze_report, certify_report, complete_report, random_regular_point, rank_test_report, AnalyzeReport,
    BoundRow, CertifyReport, CompleteOptions, CompleteReport, Method, PointSource, RankTestCliReport,
};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{format_sig, parse_matrix_csv, parse_observed, parse_pattern, write_matrix_csv};
use crate::geometry::DEFAULT_RANK_TOL;
use crate::harness::{
    mse_compare, qq_data, qq_nested, rank_selection_compare, wellposed_probability, wilson_reproduction,
    ExperimentResult, InstanceSpec, McConfig, Sampling, WilsonReport,
};
use crate::solvers::{NuclearAlgorithm, NuclearOptions, SolverConfig};
use crate::stats::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "rankcert", version, about = "Identifiability and rank selection for low-rank matrix completion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pattern diagnostics: counts, reducibility, rank bounds.
    Analyze {
        /// Pattern or observed matrix (coordinate text or dense CSV).
        input: PathBuf,
    },
    /// Well-posedness at a completion (or a random point) and the generic
    /// characteristic rank.
    Certify {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Dense CSV completion; a random rank-r point is used otherwise.
        #[arg(long)]
        completion: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
    },
    /// Complete an observed matrix.
    Complete {
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        rank: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Random rank-r start for lrma instead of the zero-filled matrix.
        #[arg(long)]
        random_init: bool,
        /// Singular value fraction for the rank of a nuclear-norm solution.
        #[arg(long, default_value_t = 0.999)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "admm")]
        nuclear_algorithm: NuclearArg,
        #[arg(long, default_value_t = 10_000)]
        max_subset_search: usize,
    },
    /// Sequential chi-square rank test.
    RankTest {
        input: PathBuf,
        /// Noise standard deviation of a single observation.
        #[arg(long)]
        sigma: f64,
        /// Number of averaged replicates N.
        #[arg(long, default_value_t = 1)]
        sample_size: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        r_max: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo experiment.
    Experiment(ExperimentArgs),
    /// The 6 × 6 symmetric example with unknown diagonal.
    Wilson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NuclearArg {
    Admm,
    Svt,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    WellposedProbability,
    MseCompare,
    Qq,
    QqNested,
    RankSelection,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    #[arg(long, default_value_t = 20)]
    pub n1: usize,
    #[arg(long, default_value_t = 25)]
    pub n2: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    pub ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.6")]
    pub probs: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 5.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100)]
    pub sample_size: usize,
    /// Number of observed entries for qq, qq-nested and rank-selection.
    #[arg(long, default_value_t = 300)]
    pub cardinality: usize,
    /// Tested rank (also the true rank) for qq and qq-nested.
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, default_value_t = 5)]
    pub removed: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.9,0.99")]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on invalid input, 2 on numerical
/// failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs a parsed command and writes its report.
pub fn execute(cli: &Cli) -> Result<()> {
    let text = render(cli)?;
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(Error::from)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn render(cli: &Cli) -> Result<String> {
    let json = cli.format == Format::Json;
    match &cli.command {
        Command::Analyze { input } => {
            let rep = analyze_report(&parse_pattern(&read(input)?)?);
            if json {
                to_json(&rep)
            } else {
                Ok(analyze_csv(&rep))
            }
        }
        Command::Certify {
            input,
            rank,
            completion,
            trials,
            tol,
        } => {
            let text = read(input)?;
            let pattern = parse_pattern(&text)?;
            let observed = parse_observed(&text).ok();
            let y = completion.as_deref().map(|p| read(p).and_then(|t| parse_matrix_csv(&t))).transpose()?;
            let rep = certify_report(&pattern, observed.as_ref(), y.as_ref(), *rank, *trials, *tol, cli.seed)?;
            if json {
                to_json(&rep)
            } else {
                Ok(certify_csv(&rep))
            }
        }
        Command::Complete {
            input,
            method,
            rank,
            solver,
            random_init,
            threshold,
            nuclear_algorithm,
            max_subset_search,
        } => {
            let m = parse_observed(&read(input)?)?;
            let mut config = SolverConfig::default().with_tol(solver.tol).with_max_iter(solver.max_iter);
            config.seed = cli.seed;
            config.random_init = *random_init;
            let nuclear = NuclearOptions {
                algorithm: match nuclear_algorithm {
                    NuclearArg::Admm => NuclearAlgorithm::Admm,
                    NuclearArg::Svt => NuclearAlgorithm::Svt,
                },
                ..Default::default()
            };
            let opts = CompleteOptions {
                method: *method,
                rank: *rank,
                config,
                nuclear,
                threshold: *threshold,
                max_subset_search: *max_subset_search,
            };
            let rep = complete_report(&m, &opts)?;
            if json {
                to_json(&rep)
            } else {
                Ok(complete_csv(&rep))
            }
        }
        Command::RankTest {
            input,
            sigma,
            sample_size,
            alpha,
            r_max,
            solver,
        } => {
            let m = parse_observed(&read(input)?)?;
            let noise = NoiseModel::new(*sample_size, *sigma)?;
            let mut cfg = SolverConfig::default().with_tol(solver.tol).with_max_iter(solver.max_iter);
            cfg.seed = cli.seed;
            let rep = rank_test_report(&m, &noise, *alpha, *r_max, &cfg)?;
            if json {
                to_json(&rep)
            } else {
                Ok(rank_test_csv(&rep))
            }
        }
        Command::Experiment(args) => {
            let res = run_experiment(args, cli.seed)?;
            if json {
                to_json(&res)
            } else {
                Ok(experiment_csv(&res))
            }
        }
        Command::Wilson => {
            let rep = wilson_reproduction()?;
            if json {
                to_json(&rep)
            } else {
                Ok(wilson_csv(&rep))
            }
        }
    }
}

/// Runs the named experiment with the given seed.
pub fn run_experiment(args: &ExperimentArgs, seed: u64) -> Result<ExperimentResult> {
    let mut cfg = McConfig::default();
    cfg.solver = cfg.solver.with_tol(args.tol).with_max_iter(args.max_iter);
    let noise = || NoiseModel::new(args.sample_size, args.sigma);
    let spec = || -> Result<InstanceSpec> {
        Ok(InstanceSpec::new(
            args.n1,
            args.n2,
            args.rank,
            Sampling::Cardinality(args.cardinality),
            noise()?,
            seed,
        ))
    };
    match args.name {
        ExperimentName::WellposedProbability => {
            wellposed_probability(args.n1, args.n2, &args.ranks, &args.probs, args.reps, seed)
        }
        ExperimentName::MseCompare => {
            mse_compare(args.n1, args.n2, &args.ranks, &args.probs, &noise()?, args.reps, seed, &cfg)
        }
        ExperimentName::Qq => qq_data(&spec()?, args.rank, args.reps, &cfg),
        ExperimentName::QqNested => qq_nested(&spec()?, args.removed, args.rank, args.reps, &cfg),
        ExperimentName::RankSelection => rank_selection_compare(
            args.n1,
            args.n2,
            &args.ranks,
            Sampling::Cardinality(args.cardinality),
            &noise()?,
            args.reps,
            &args.thresholds,
            seed,
            &cfg,
        ),
    }
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn opt_sig(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), format_sig)
}

fn opt_usize(x: Option<usize>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

pub fn analyze_csv(rep: &AnalyzeReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# n1 = {}, n2 = {}, m = {}, missing = {}", rep.n1, rep.n2, rep.m, rep.missing);
    let _ = writeln!(out, "# row_counts = {}", list(&rep.row_counts));
    let _ = writeln!(out, "# col_counts = {}", list(&rep.col_counts));
    let _ = writeln!(
        out,
        "# reducible = {}, components = {}, component_sizes = {}",
        rep.reducible,
        rep.component_sizes.len(),
        list(&rep.component_sizes)
    );
    let _ = writeln!(out, "# empty_rows = {}, empty_cols = {}", list(&rep.empty_rows), list(&rep.empty_cols));
    let _ = writeln!(
        out,
        "# r_value = {}, r_ceil = {}, r_hat = {}",
        format_sig(rep.r_value),
        rep.r_ceil,
        format_sig(rep.r_hat)
    );
    out.push_str("r,manifold_dim,f_rm,df\n");
    for row in &rep.table {
        let _ = writeln!(out, "{},{},{},{}", row.r, row.manifold_dim, row.f_rm, row.df);
    }
    out
}

pub fn certify_csv(rep: &CertifyReport) -> String {
    let w = &rep.wellposedness;
    let c = &rep.characteristic;
    let rows: Vec<(&str, String)> = vec![
        ("rank", rep.rank.to_string()),
        ("tol", format_sig(rep.tol)),
        ("seed", rep.seed.to_string()),
        ("point", format!("{:?}", rep.point).to_lowercase()),
        ("max_observed_deviation", opt_sig(rep.max_observed_deviation)),
        ("well_posed", w.well_posed.to_string()),
        ("decided_by", format!("{:?}", w.decided_by)),
        ("rank_of_k", opt_usize(w.rank_of_k)),
        ("required_rank", w.required_rank.to_string()),
        ("k_sigma_ratio", opt_sig(w.k_sigma_ratio)),
        ("dimension_ok", w.dimension_ok.to_string()),
        ("min_counts_ok", w.min_counts_ok.to_string()),
        ("irreducible", w.irreducible.to_string()),
        ("empty_lines", w.empty_lines.to_string()),
        ("trials", c.trials.to_string()),
        ("characteristic_rank", c.rho.to_string()),
        ("f_rm", c.f_rm.to_string()),
        ("generic_well_posed", c.generic_well_posed.to_string()),
        ("jacobian_tol", format_sig(c.tol_used)),
    ];
    key_values(&rows)
}

fn key_values(rows: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

pub fn complete_csv(rep: &CompleteReport) -> String {
    let mut out = String::new();
    let c = &rep.config;
    let _ = writeln!(
        out,
        "# method = {:?}, rank = {}, n1 = {}, n2 = {}, m = {}",
        rep.method,
        opt_usize(rep.rank),
        rep.n1,
        rep.n2,
        rep.m
    );
    let _ = writeln!(
        out,
        "# tol = {}, max_iter = {}, seed = {}, random_init = {}",
        format_sig(c.tol),
        c.max_iter,
        c.seed,
        c.random_init
    );
    let _ = writeln!(
        out,
        "# fit = {}, iterations = {}, converged = {}",
        format_sig(rep.fit),
        opt_usize(rep.iterations),
        rep.converged
    );
    if let Some((a, b)) = rep.optimality_residuals {
        let _ = writeln!(out, "# optimality_residuals = {} {}", format_sig(a), format_sig(b));
    }
    if let (Some(b), Some(r)) = (rep.threshold, rep.threshold_rank) {
        let _ = writeln!(out, "# threshold = {}, threshold_rank = {r}", format_sig(b));
    }
    if rep.unfilled.is_empty() {
        out.push_str(&write_matrix_csv(&rep.y_hat));
    } else {
        let _ = writeln!(out, "# unfilled = {}", rep.unfilled.len());
        for i in 0..rep.n1 {
            let row: Vec<String> = (0..rep.n2)
                .map(|j| {
                    if rep.unfilled.contains(&(i, j)) {
                        "NA".into()
                    } else {
                        format_sig(rep.y_hat[(i, j)])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
    }
    out
}

pub fn rank_test_csv(rep: &RankTestCliReport) -> String {
    let t = &rep.test;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# n1 = {}, n2 = {}, m = {}, sigma = {}, sample_size = {}",
        rep.n1,
        rep.n2,
        rep.m,
        format_sig(rep.noise.sigma_at(0)),
        rep.noise.n
    );
    let _ = writeln!(
        out,
        "# alpha = {}, r_max = {}, tol = {}, max_iter = {}, seed = {}",
        format_sig(t.alpha),
        t.r_max,
        format_sig(rep.config.tol),
        rep.config.max_iter,
        rep.config.seed
    );
    let _ = writeln!(out, "# selected_rank = {}, monotone = {}", opt_usize(t.selected_rank), t.monotone);
    out.push_str("r,statistic,df,p_value,converged\n");
    for row in &t.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.r,
            format_sig(row.t_n),
            row.df,
            format_sig(row.p_value),
            row.converged
        );
    }
    out
}

pub fn experiment_csv(res: &ExperimentResult) -> String {
    let mut out = format!("# experiment = {}, seed = {}, reps = {}\n", res.name, res.seed, res.replications);
    for (k, v) in &res.params {
        let _ = writeln!(out, "# {k} = {}", format_sig(*v));
    }
    out.push_str(&res.to_csv());
    out
}

pub fn wilson_csv(rep: &WilsonReport) -> String {
    let vec = |xs: &[f64]| xs.iter().map(|&x| format_sig(x)).collect::<Vec<_>>().join(" ");
    let mut rows: Vec<(String, String)> = vec![
        ("m".into(), rep.m.to_string()),
        ("r_value".into(), format_sig(rep.r_value)),
        ("r_ceil".into(), rep.r_ceil.to_string()),
        ("df_rank3".into(), rep.df_rank3.to_string()),
    ];
    for (k, c) in rep.completions.iter().enumerate() {
        let p = format!("completion{}", k + 1);
        rows.push((format!("{p}_diagonal"), vec(&c.diagonal)));
        rows.push((format!("{p}_printed_diagonal"), vec(&c.printed_diagonal)));
        rows.push((format!("{p}_sigma_ratio"), format_sig(c.sigma_ratio)));
        rows.push((format!("{p}_printed_sigma_ratio"), format_sig(c.printed_sigma_ratio)));
        rows.push((format!("{p}_well_posed"), c.well_posed.to_string()));
    }
    rows.extend([
        ("nuclear_diagonal".into(), vec(&rep.nuclear_diagonal)),
        ("nuclear_printed_diagonal".into(), vec(&rep.nuclear_printed_diagonal)),
        ("nuclear_singular_values".into(), vec(&rep.nuclear_singular_values)),
        ("nuclear_threshold".into(), format_sig(rep.nuclear_threshold)),
        ("nuclear_threshold_rank".into(), rep.nuclear_threshold_rank.to_string()),
        ("nuclear_rank_tol".into(), format_sig(rep.nuclear_rank_tol)),
        ("nuclear_numerical_rank".into(), rep.nuclear_numerical_rank.to_string()),
        ("nuclear_tol".into(), format_sig(rep.nuclear_tol)),
        ("nuclear_converged".into(), rep.nuclear_converged.to_string()),
        ("lrma_diagonal".into(), vec(&rep.lrma_diagonal)),
        ("lrma_fit".into(), format_sig(rep.lrma_fit)),
        ("lrma_tol".into(), format_sig(rep.lrma_tol)),
        ("lrma_converged".into(), rep.lrma_converged.to_string()),
    ]);
    let borrowed: Vec<(&str, String)> = rows.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    key_values(&borrowed)
}
