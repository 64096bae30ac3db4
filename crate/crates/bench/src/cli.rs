//! Command-line front end. `main.rs` only forwards `std::env::args` here so
//! the commands can be driven from tests.

use std::io::Write;
use std::path::{Path, PathBuf};

use cdqp::{
    compute_offline, conjugacy_check, instrumented_solve, rho_init, Backend, QpProblem, RhoMode,
    SolveStatus, SolverSettings,
};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{initial_points, run_benchmark, write_trace, BenchError};
use crate::io::{load_cache, load_problem, save_cache, write_text, CacheDocument, FormatError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] FormatError),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::NoRuns => CliError::Usage(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cdqp",
    about = "Box-constrained QP via ADMM with cached conjugate directions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute and cache conjugate directions and the augmentation matrix.
    Offline(OfflineArgs),
    /// Benchmark the backends over seeded random initial points.
    Bench(BenchArgs),
    /// Write the per-iteration residual trace of one solve as CSV.
    Trace(TraceArgs),
    /// Check conjugacy of a cached direction set against a problem.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct OfflineArgs {
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub sigma: f64,
    #[arg(long = "rho-bar", default_value_t = 0.1)]
    pub rho_bar: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SolverFlags {
    /// Defaults to the cache's sigma, or 1e-4 without a cache.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1.3)]
    pub gamma: f64,
    #[arg(long = "rho-bar", default_value_t = 0.1)]
    pub rho_bar: f64,
    #[arg(long, default_value_t = 5)]
    pub nc: usize,
    #[arg(long = "eps-prim", default_value_t = 1e-4)]
    pub eps_prim: f64,
    #[arg(long = "eps-dual", default_value_t = 1e-4)]
    pub eps_dual: f64,
    #[arg(long = "max-outer", default_value_t = 4000)]
    pub max_outer: usize,
    #[arg(long = "inner-tol", default_value_t = 1e-10)]
    pub inner_tol: f64,
    /// Defaults to 10 n.
    #[arg(long = "inner-max")]
    pub inner_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub problem: PathBuf,
    /// Direction cache; computed in memory when absent.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed initial point for every run, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// `cg`, `cached-cd` or `both`.
    #[arg(long, default_value = "both")]
    pub backend: String,
    /// `offline` or `standard:<rho_bar>`.
    #[arg(long, default_value = "offline")]
    pub init: String,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Machine-readable JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    pub problem: PathBuf,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Initial point, comma separated; defaults to (1, 2, ..., n).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// `offline` or `standard:<rho_bar>`.
    #[arg(long, default_value = "offline")]
    pub init: String,
    /// Defaults to `cached-cd` for offline init and `cg` for standard init.
    #[arg(long)]
    pub backend: Option<String>,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub problem: PathBuf,
    pub cache: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Scale applied to the cached augmentation matrix before checking.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

fn parse_backend(s: &str) -> Result<Vec<Backend>, CliError> {
    match s {
        "cg" => Ok(vec![Backend::Cg]),
        "cached-cd" | "cd" => Ok(vec![Backend::CachedCd]),
        "both" => Ok(vec![Backend::CachedCd, Backend::Cg]),
        other => Err(CliError::Usage(format!(
            "unknown backend {other:?} (expected cg, cached-cd or both)"
        ))),
    }
}

/// `offline` → `None`, `standard:<rho_bar>` → `Some(rho_bar)`.
fn parse_init(s: &str) -> Result<Option<f64>, CliError> {
    if s == "offline" {
        return Ok(None);
    }
    s.strip_prefix("standard:")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .map(Some)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "bad --init {s:?} (expected offline or standard:<rho_bar>)"
            ))
        })
}

fn solver_err(e: cdqp::Error) -> CliError {
    CliError::Solver(e.to_string())
}

/// Loads the cache, or computes one seeded from the standard initialization
/// with `rho_bar`.
fn obtain_cache(
    problem: &QpProblem<f64>,
    cache: Option<&Path>,
    sigma: Option<f64>,
    rho_bar: f64,
) -> Result<CacheDocument, CliError> {
    match cache {
        Some(path) => Ok(load_cache(path)?),
        None => {
            let seed = rho_init(problem, rho_bar).map_err(|e| CliError::Usage(e.to_string()))?;
            let (directions, rho) =
                compute_offline(problem, sigma.unwrap_or(1e-4), &seed).map_err(solver_err)?;
            Ok(CacheDocument { directions, rho })
        }
    }
}

fn build_settings(
    flags: &SolverFlags,
    sigma: f64,
    rho_mode: RhoMode,
    backend: Backend,
) -> SolverSettings<f64> {
    SolverSettings {
        sigma,
        gamma: flags.gamma,
        rho_bar: flags.rho_bar,
        n_c: flags.nc,
        eps_prim: flags.eps_prim,
        eps_dual: flags.eps_dual,
        max_outer: flags.max_outer,
        inner_rel_tol: flags.inner_tol,
        inner_max: flags.inner_max,
        backend,
        rho_mode,
        ..SolverSettings::default()
    }
}

pub fn cmd_offline(args: &OfflineArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = load_problem(&args.problem)?;
    let seed = rho_init(&problem, args.rho_bar).map_err(|e| CliError::Usage(e.to_string()))?;
    let (directions, rho) = compute_offline(&problem, args.sigma, &seed).map_err(solver_err)?;
    let report = conjugacy_check(&directions, &problem, args.sigma, &rho, 1e-8);
    let doc = CacheDocument { directions, rho };
    save_cache(&args.out, &doc)?;
    if doc.directions.strategy().is_scale_fragile() {
        eprintln!(
            "warning: A is rank deficient; cached directions are scale-fragile and will be CG-polished"
        );
    }
    let _ = writeln!(
        out,
        "strategy {}\nfingerprint {}\nobjective residual {:e}\nconstraint residual {:e}\ncombined residual {:e}",
        doc.directions.strategy().as_str(),
        doc.directions.fingerprint(),
        report.objective_residual,
        report.constraint_residual,
        report.combined_residual
    );
    Ok(())
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = load_problem(&args.problem)?;
    let cache = load_cache(&args.cache)?;
    if !(args.scale > 0.0 && args.scale.is_finite()) {
        return Err(CliError::Usage("--scale must be positive".into()));
    }
    let rho = cache.rho.rescale(args.scale);
    let report = conjugacy_check(
        &cache.directions,
        &problem,
        cache.directions.sigma(),
        &rho,
        args.tol,
    );
    let _ = writeln!(
        out,
        "objective residual {:e}\nconstraint residual {:e}\ncombined residual {:e}\n{}",
        report.objective_residual,
        report.constraint_residual,
        report.combined_residual,
        if report.passed { "pass" } else { "FAIL" }
    );
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "conjugacy check failed at tol {:e}",
            args.tol
        )))
    }
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let backends = parse_backend(&args.backend)?;
    let init = parse_init(&args.init)?;
    let problem = load_problem(&args.problem)?;
    let seed_rho_bar = init.unwrap_or(args.solver.rho_bar);
    let cache = obtain_cache(
        &problem,
        args.cache.as_deref(),
        args.solver.sigma,
        seed_rho_bar,
    )?;
    let sigma = args.solver.sigma.unwrap_or(cache.directions.sigma());
    let mut settings = build_settings(&args.solver, sigma, RhoMode::Offline, Backend::Cg);
    if let Some(rho_bar) = init {
        settings.rho_mode = RhoMode::Standard;
        settings.rho_bar = rho_bar;
    }
    let points = match &args.x0 {
        Some(x0) => {
            if x0.len() != problem.n() {
                return Err(CliError::Usage(format!(
                    "--x0 needs {} values",
                    problem.n()
                )));
            }
            vec![x0.clone(); args.runs]
        }
        None => initial_points(args.seed, args.runs, problem.n()),
    };
    let report = run_benchmark(
        &problem,
        (&cache.directions, &cache.rho),
        &settings,
        &backends,
        &points,
        args.seed,
    )?;
    let _ = write!(out, "{}", report.table());
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_text(path, &json)?;
    }
    Ok(())
}

pub fn cmd_trace(args: &TraceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let init = parse_init(&args.init)?;
    let default_backend = if init.is_some() { "cg" } else { "cached-cd" };
    let backend =
        match parse_backend(args.backend.as_deref().unwrap_or(default_backend))?.as_slice() {
            [b] => *b,
            _ => return Err(CliError::Usage("trace runs a single backend".into())),
        };
    let problem = load_problem(&args.problem)?;
    let x0 = match &args.x0 {
        Some(x0) if x0.len() != problem.n() => {
            return Err(CliError::Usage(format!(
                "--x0 needs {} values",
                problem.n()
            )))
        }
        Some(x0) => x0.clone(),
        None => (1..=problem.n()).map(|i| i as f64).collect(),
    };
    let seed_rho_bar = init.unwrap_or(args.solver.rho_bar);
    let cache = obtain_cache(
        &problem,
        args.cache.as_deref(),
        args.solver.sigma,
        seed_rho_bar,
    )?;
    let sigma = args.solver.sigma.unwrap_or(cache.directions.sigma());
    let mut settings = build_settings(&args.solver, sigma, RhoMode::Offline, backend);
    if let Some(rho_bar) = init {
        settings.rho_mode = RhoMode::Standard;
        settings.rho_bar = rho_bar;
    }
    let res = instrumented_solve(
        &problem,
        &settings,
        Some((&cache.directions, &cache.rho)),
        &x0,
    )
    .map_err(solver_err)?;

    let mut csv = Vec::new();
    write_trace(&res, &mut csv).expect("writing to memory");
    match &args.out {
        Some(path) => write_text(path, std::str::from_utf8(&csv).expect("ascii csv"))?,
        None => {
            let _ = out.write_all(&csv);
        }
    }
    let last = res.residual_history.last();
    eprintln!(
        "status {}  iterations {}  final r_prim {:e}  r_dual {:e}",
        res.status.as_str(),
        res.outer_iterations,
        last.map_or(f64::NAN, |r| r.prim_2),
        last.map_or(f64::NAN, |r| r.dual_2)
    );
    if res.status == SolveStatus::InnerFailure {
        return Err(CliError::Solver(format!(
            "inner solver failed: {}",
            res.inner_error.map_or_else(String::new, |e| e.to_string())
        )));
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Offline(a) => cmd_offline(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Trace(a) => cmd_trace(a, out),
        Command::Check(a) => cmd_check(a, out),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
