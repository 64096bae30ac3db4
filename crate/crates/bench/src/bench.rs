//! Ensemble benchmark over random initial points and residual-trace export.

use std::fmt::Write as _;
use std::io::Write;

use cdqp::{
    instrumented_solve, AugmentationMatrix, Backend, ConjugateDirectionSet, QpProblem, RhoMode,
    SolveResult, SolveStatus, SolverSettings,
};
use serde::Serialize;
use thiserror::Error;

use crate::rng::NormalRng;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("run {run} ({backend}): {source}")]
    Solver {
        run: usize,
        backend: &'static str,
        #[source]
        source: cdqp::Error,
    },
    #[error("run {run} ({backend}): inner solver failed: {detail}")]
    InnerFailure {
        run: usize,
        backend: &'static str,
        detail: String,
    },
    #[error("runs must be at least 1")]
    NoRuns,
}

/// Means over all runs for one backend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendRow {
    pub backend: String,
    pub mean_t_tot_ms: f64,
    pub mean_t_inv_ms: f64,
    pub mean_iterations: f64,
    pub mean_inner_flops: f64,
    pub solved_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingsEcho {
    pub sigma: f64,
    pub gamma: f64,
    pub rho_bar: f64,
    pub n_c: usize,
    pub eps_prim: f64,
    pub eps_dual: f64,
    pub max_outer: usize,
    pub inner_rel_tol: f64,
    pub rho_mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub runs: usize,
    pub seed: u64,
    pub settings: SettingsEcho,
    pub rows: Vec<BackendRow>,
    /// Fraction of runs where every backend stopped at the same iteration.
    pub equal_iterations_fraction: f64,
    /// Per-run outer iteration counts, one vector per backend.
    #[serde(skip)]
    pub iterations: Vec<Vec<usize>>,
    /// Per-run inner flop totals, one vector per backend.
    #[serde(skip)]
    pub flops: Vec<Vec<u64>>,
}

impl BenchmarkReport {
    pub fn row(&self, backend: Backend) -> Option<&BackendRow> {
        self.rows.iter().find(|r| r.backend == backend.as_str())
    }

    /// Table with the columns T_tot, T_inv, N and inner flops.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>12} {:>12} {:>10} {:>14} {:>8}",
            "backend", "T_tot (ms)", "T_inv (ms)", "N", "inner flops", "solved"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:>12.4} {:>12.4} {:>10.2} {:>14.1} {:>8}",
                r.backend,
                r.mean_t_tot_ms,
                r.mean_t_inv_ms,
                r.mean_iterations,
                r.mean_inner_flops,
                r.solved_runs
            );
        }
        let _ = writeln!(
            out,
            "runs {}  seed {}  equal-N fraction {:.3}",
            self.runs, self.seed, self.equal_iterations_fraction
        );
        out
    }

    /// Report with the wall-clock columns zeroed, for determinism checks.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.mean_t_tot_ms = 0.0;
            r.mean_t_inv_ms = 0.0;
        }
        out
    }
}

/// Initial points for `runs` runs: consecutive blocks of `n` standard normal
/// draws from one stream, so run `r` always gets the same `x0` for a seed.
pub fn initial_points(seed: u64, runs: usize, n: usize) -> Vec<Vec<f64>> {
    let mut rng = NormalRng::new(seed);
    (0..runs).map(|_| rng.normal_vec(n)).collect()
}

/// Runs every backend once per initial point with identical `x0`.
pub fn run_benchmark(
    problem: &QpProblem<f64>,
    offline: (&ConjugateDirectionSet<f64>, &AugmentationMatrix<f64>),
    base: &SolverSettings<f64>,
    backends: &[Backend],
    points: &[Vec<f64>],
    seed: u64,
) -> Result<BenchmarkReport, BenchError> {
    if points.is_empty() {
        return Err(BenchError::NoRuns);
    }
    let runs = points.len();
    let mut iterations = vec![Vec::with_capacity(runs); backends.len()];
    let mut flops = vec![Vec::with_capacity(runs); backends.len()];
    let mut rows = Vec::new();
    for (b, &backend) in backends.iter().enumerate() {
        let settings = SolverSettings {
            backend,
            ..base.clone()
        };
        let (mut t_tot, mut t_inv, mut solved) = (0.0, 0.0, 0);
        for (run, x0) in points.iter().enumerate() {
            let res =
                instrumented_solve(problem, &settings, Some(offline), x0).map_err(|source| {
                    BenchError::Solver {
                        run,
                        backend: backend.as_str(),
                        source,
                    }
                })?;
            check_inner(&res, run, backend)?;
            t_tot += res.wall_time_total.as_secs_f64() * 1e3;
            t_inv += res.inner_time_total.as_secs_f64() * 1e3;
            solved += usize::from(res.status == SolveStatus::Solved);
            iterations[b].push(res.outer_iterations);
            flops[b].push(res.inner_flops_total);
        }
        let r = runs as f64;
        rows.push(BackendRow {
            backend: backend.as_str().to_string(),
            mean_t_tot_ms: t_tot / r,
            mean_t_inv_ms: t_inv / r,
            mean_iterations: iterations[b].iter().sum::<usize>() as f64 / r,
            mean_inner_flops: flops[b].iter().sum::<u64>() as f64 / r,
            solved_runs: solved,
        });
    }
    let equal = (0..runs)
        .filter(|&run| iterations.iter().all(|it| it[run] == iterations[0][run]))
        .count();
    Ok(BenchmarkReport {
        runs,
        seed,
        settings: SettingsEcho {
            sigma: base.sigma,
            gamma: base.gamma,
            rho_bar: base.rho_bar,
            n_c: base.n_c,
            eps_prim: base.eps_prim,
            eps_dual: base.eps_dual,
            max_outer: base.max_outer,
            inner_rel_tol: base.inner_rel_tol,
            rho_mode: match base.rho_mode {
                RhoMode::Offline => "offline".into(),
                RhoMode::Standard => format!("standard:{}", base.rho_bar),
            },
        },
        rows,
        equal_iterations_fraction: equal as f64 / runs as f64,
        iterations,
        flops,
    })
}

fn check_inner(res: &SolveResult<f64>, run: usize, backend: Backend) -> Result<(), BenchError> {
    if res.status == SolveStatus::InnerFailure {
        return Err(BenchError::InnerFailure {
            run,
            backend: backend.as_str(),
            detail: res
                .inner_error
                .as_ref()
                .map_or_else(|| "unknown".to_string(), ToString::to_string),
        });
    }
    Ok(())
}

pub const TRACE_HEADER: &str = "k,r_prim_2,r_dual_2,scale";

/// One CSV row per outer iteration, `k` counted from 1.
pub fn write_trace<W: Write>(res: &SolveResult<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for (k, (rec, scale)) in res
        .residual_history
        .iter()
        .zip(&res.rho_scale_history)
        .enumerate()
    {
        writeln!(
            out,
            "{},{:e},{:e},{:e}",
            k + 1,
            rec.prim_2,
            rec.dual_2,
            scale
        )?;
    }
    Ok(())
}
