//! OSQP-style ADMM in indirect form.
//!
//! Each outer iteration solves the reduced system
//!
//! ```text
//! (P + σI + Aᵀϱ A) x̃ = σx − q + Aᵀ(ϱz − y),     z̃ = A x̃
//! ```
//!
//! with either warm-started CG or the cached conjugate directions, then
//! applies the relaxed `x`, `z` (projected) and `y` updates. The scalar scale
//! of `ϱ` adapts from the residual balance for the first `n_c` iterations and
//! is frozen afterwards.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{cd_then_cg_polish, cg_solve, norm_inf, CgTrace, SpdOperator};
use crate::offline::{fingerprint, rho_init, AugmentationMatrix, ConjugateDirectionSet};
use crate::qp::{project_box, residuals, Iterate, QpProblem, Residuals};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Conjugate gradient every iteration, warm-started from the previous `x̃`.
    Cg,
    /// Cached conjugate directions from `x̄₀ = 0`, CG-polished if needed.
    CachedCd,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Cg => "cg",
            Backend::CachedCd => "cached-cd",
        }
    }
}

/// Where the initial augmentation matrix comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMode {
    /// `ϱ_off` from the offline phase.
    Offline,
    /// `ρ̄` per inequality row, `10³ρ̄` per equality row.
    Standard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings<T> {
    pub sigma: T,
    /// Relaxation parameter in `(0, 2)`.
    pub gamma: T,
    pub rho_bar: T,
    /// Adaptive updates run while the iteration index is below this.
    pub n_c: usize,
    pub eps_prim: T,
    pub eps_dual: T,
    pub max_outer: usize,
    pub inner_rel_tol: T,
    /// Inner iteration cap; `None` means `10 n`.
    pub inner_max: Option<usize>,
    pub backend: Backend,
    pub rho_mode: RhoMode,
    pub scale_clamp: (T, T),
    /// Keep every `(x, z, y)` in [`SolveResult::iterates`].
    pub record_iterates: bool,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            sigma: T::lit(1e-4),
            gamma: T::lit(1.3),
            rho_bar: T::lit(0.1),
            n_c: 5,
            eps_prim: T::lit(1e-4),
            eps_dual: T::lit(1e-4),
            max_outer: 4000,
            inner_rel_tol: T::lit(1e-10),
            inner_max: None,
            backend: Backend::CachedCd,
            rho_mode: RhoMode::Offline,
            scale_clamp: (T::lit(1e-6), T::lit(1e6)),
            record_iterates: false,
        }
    }
}

impl<T: Scalar> SolverSettings<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSettings(msg.into()));
        if !(self.sigma > T::zero()) {
            return bad("sigma must be positive");
        }
        if !(self.gamma > T::zero() && self.gamma < T::lit(2.0)) {
            return bad("gamma must lie in (0, 2)");
        }
        if !(self.rho_bar > T::zero()) {
            return bad("rho_bar must be positive");
        }
        if self.n_c <= 2 {
            return bad("n_c must exceed 2");
        }
        if !(self.eps_prim > T::zero()
            && self.eps_dual > T::zero()
            && self.inner_rel_tol > T::zero())
        {
            return bad("tolerances must be positive");
        }
        if self.max_outer == 0 || self.inner_max == Some(0) {
            return bad("iteration caps must be at least 1");
        }
        let (lo, hi) = self.scale_clamp;
        if !(lo > T::zero() && lo <= T::one() && hi >= T::one() && hi.is_finite()) {
            return bad("scale clamp must satisfy 0 < lo <= 1 <= hi < inf");
        }
        Ok(())
    }

    pub fn inner_max_for(&self, n: usize) -> usize {
        self.inner_max.unwrap_or(10 * n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    MaxIterations,
    InnerFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::InnerFailure => "inner-failure",
        }
    }
}

/// Residual norms after one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRecord<T> {
    pub prim_2: T,
    pub dual_2: T,
    pub prim_inf: T,
    pub dual_inf: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub x: Vec<T>,
    pub z: Vec<T>,
    pub y: Vec<T>,
    pub status: SolveStatus,
    pub outer_iterations: usize,
    pub residual_history: Vec<ResidualRecord<T>>,
    /// Scale of `ϱ` in effect during each outer iteration.
    pub rho_scale_history: Vec<T>,
    pub inner_flops_total: u64,
    /// Running inner flop total after each outer iteration.
    pub inner_flops_history: Vec<u64>,
    pub inner_iterations_total: usize,
    pub polish_iterations_total: usize,
    /// Time spent in inner solves (zero unless instrumented).
    pub inner_time_total: Duration,
    /// Time for the whole call (zero unless instrumented).
    pub wall_time_total: Duration,
    /// Per-iteration `(x, z, y)`, when requested in the settings.
    pub iterates: Vec<Iterate<T>>,
    /// Cause of an [`SolveStatus::InnerFailure`].
    pub inner_error: Option<Error>,
}

/// Offline cache handed to the solver.
pub type OfflineRef<'a, T> = (&'a ConjugateDirectionSet<T>, &'a AugmentationMatrix<T>);

/// Runs ADMM from `x0` with `z⁰ = Π(Ax⁰)` and `y⁰ = 0`.
pub fn solve<T: Scalar>(
    problem: &QpProblem<T>,
    settings: &SolverSettings<T>,
    offline: Option<OfflineRef<'_, T>>,
    x0: &[T],
) -> Result<SolveResult<T>> {
    run(problem, settings, offline, x0, false)
}

/// [`solve`] that also measures wall time around each inner solve and
/// around the whole call. The iterate sequence is identical.
pub fn instrumented_solve<T: Scalar>(
    problem: &QpProblem<T>,
    settings: &SolverSettings<T>,
    offline: Option<OfflineRef<'_, T>>,
    x0: &[T],
) -> Result<SolveResult<T>> {
    run(problem, settings, offline, x0, true)
}

/// Residual-balancing factor
/// `√[(‖r_prim‖∞ / max(‖Ax‖∞, ‖z‖∞)) / (‖r_dual‖∞ / max(‖Px‖∞, ‖Aᵀy‖∞, ‖q‖∞))]`,
/// clamped into `clamp`. Returns 1 when a normalizer is ≤ 1e-14 or the ratio
/// is not finite.
pub fn rho_update_factor<T: Scalar>(
    problem: &QpProblem<T>,
    it: &Iterate<T>,
    res: &Residuals<T>,
    clamp: (T, T),
) -> T {
    let tiny = T::lit(1e-14);
    let prim_norm = norm_inf(&problem.a().matvec(&it.x)).max(norm_inf(&it.z));
    let dual_norm = norm_inf(&problem.p().matvec(&it.x))
        .max(norm_inf(&problem.a().matvec_t(&it.y)))
        .max(norm_inf(problem.q()));
    if prim_norm <= tiny || dual_norm <= tiny {
        return T::one();
    }
    let ratio = (res.prim_norm_inf / prim_norm) / (res.dual_norm_inf / dual_norm);
    let factor = ratio.sqrt();
    if !factor.is_finite() || !(factor > T::zero()) {
        return T::one();
    }
    factor.max(clamp.0).min(clamp.1)
}

/// Applies the residual-balancing update to `rho`. The resulting scale is
/// kept inside `clamp` as well.
pub fn rho_update<T: Scalar>(
    problem: &QpProblem<T>,
    it: &Iterate<T>,
    res: &Residuals<T>,
    rho: &AugmentationMatrix<T>,
    clamp: (T, T),
) -> AugmentationMatrix<T> {
    let factor = rho_update_factor(problem, it, res, clamp);
    let target = (rho.scale() * factor).max(clamp.0).min(clamp.1);
    rho.rescale(target / rho.scale())
}

fn run<T: Scalar>(
    problem: &QpProblem<T>,
    settings: &SolverSettings<T>,
    offline: Option<OfflineRef<'_, T>>,
    x0: &[T],
    timed: bool,
) -> Result<SolveResult<T>> {
    let start = timed.then(Instant::now);
    settings.validate()?;
    let (n, m) = (problem.n(), problem.m());
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            field: "x0",
            expected: n,
            found: x0.len(),
        });
    }

    let mut rho = match settings.rho_mode {
        RhoMode::Offline => offline.ok_or(Error::MissingOffline)?.1.clone(),
        RhoMode::Standard => rho_init(problem, settings.rho_bar)?,
    };
    if rho.m() != m {
        return Err(Error::DimensionMismatch {
            field: "augmentation matrix",
            expected: m,
            found: rho.m(),
        });
    }
    let dirs = match settings.backend {
        Backend::Cg => None,
        Backend::CachedCd => {
            let dirs = offline.ok_or(Error::MissingOffline)?.0;
            let expected = fingerprint(problem, settings.sigma, rho.rho_base());
            if dirs.fingerprint() != expected || dirs.len() != n {
                return Err(Error::FingerprintMismatch {
                    expected,
                    found: dirs.fingerprint().to_string(),
                });
            }
            Some(dirs)
        }
    };
    let inner_max = settings.inner_max_for(n);
    let gamma = settings.gamma;
    let one_minus_gamma = T::one() - gamma;

    let mut x = x0.to_vec();
    let mut z = problem.project(&problem.a().matvec(&x));
    let mut y = vec![T::zero(); m];
    let mut x_tilde = x.clone();

    let mut out = SolveResult {
        x: Vec::new(),
        z: Vec::new(),
        y: Vec::new(),
        status: SolveStatus::MaxIterations,
        outer_iterations: 0,
        residual_history: Vec::new(),
        rho_scale_history: Vec::new(),
        inner_flops_total: 0,
        inner_flops_history: Vec::new(),
        inner_iterations_total: 0,
        polish_iterations_total: 0,
        inner_time_total: Duration::ZERO,
        wall_time_total: Duration::ZERO,
        iterates: Vec::new(),
        inner_error: None,
    };

    for k in 0..settings.max_outer {
        let rho_eff = rho.effective();

        // b = σx − q + Aᵀ(ϱz − y)
        let w: Vec<T> = rho_eff
            .iter()
            .zip(&z)
            .zip(&y)
            .map(|((&r, &zi), &yi)| r * zi - yi)
            .collect();
        let atw = problem.a().matvec_t(&w);
        let b: Vec<T> = x
            .iter()
            .zip(problem.q())
            .zip(&atw)
            .map(|((&xi, &qi), &ai)| settings.sigma * xi - qi + ai)
            .collect();

        let op = SpdOperator::new(
            problem.p(),
            problem.a(),
            settings.sigma,
            rho.rho_base(),
            rho.scale(),
        );
        let inner_start = timed.then(Instant::now);
        let inner = match dirs {
            Some(dirs) => cd_then_cg_polish(&op, &b, dirs, settings.inner_rel_tol, inner_max),
            None => cg_solve(&op, &b, &x_tilde, settings.inner_rel_tol, inner_max),
        };
        if let Some(t) = inner_start {
            out.inner_time_total += t.elapsed();
        }
        let (solution, trace): (Vec<T>, CgTrace<T>) = match inner {
            Ok(v) => v,
            Err(e) => {
                out.status = SolveStatus::InnerFailure;
                out.inner_error = Some(e);
                break;
            }
        };
        out.inner_flops_total += trace.flops;
        out.inner_iterations_total += trace.iterations;
        out.polish_iterations_total += trace.extra_iterations;
        if !(trace.final_relative_residual <= settings.inner_rel_tol) {
            out.status = SolveStatus::InnerFailure;
            out.inner_error = Some(Error::InnerStall {
                residual: trace.final_relative_residual.to_f64_lossy(),
                iterations: trace.iterations + trace.extra_iterations,
            });
            break;
        }
        x_tilde = solution;

        let z_tilde = problem.a().matvec(&x_tilde);
        let x_next: Vec<T> = x_tilde
            .iter()
            .zip(&x)
            .map(|(&xt, &xi)| gamma * xt + one_minus_gamma * xi)
            .collect();
        let z_relaxed: Vec<T> = z_tilde
            .iter()
            .zip(&z)
            .map(|(&zt, &zi)| gamma * zt + one_minus_gamma * zi)
            .collect();
        let shifted: Vec<T> = z_relaxed
            .iter()
            .zip(&y)
            .zip(&rho_eff)
            .map(|((&zr, &yi), &r)| zr + yi / r)
            .collect();
        let z_next = project_box(&shifted, problem.l(), problem.u());
        let y_next: Vec<T> = y
            .iter()
            .zip(&rho_eff)
            .zip(z_relaxed.iter().zip(&z_next))
            .map(|((&yi, &r), (&zr, &zn))| yi + r * (zr - zn))
            .collect();
        x = x_next;
        z = z_next;
        y = y_next;

        let it = Iterate {
            x: x.clone(),
            z: z.clone(),
            y: y.clone(),
            k: k + 1,
        };
        let res = residuals(problem, &it);
        out.residual_history.push(ResidualRecord {
            prim_2: res.prim_norm_2,
            dual_2: res.dual_norm_2,
            prim_inf: res.prim_norm_inf,
            dual_inf: res.dual_norm_inf,
        });
        out.rho_scale_history.push(rho.scale());
        out.inner_flops_history.push(out.inner_flops_total);
        out.outer_iterations = k + 1;

        let done = res.prim_norm_2 < settings.eps_prim && res.dual_norm_2 < settings.eps_dual;
        if !done && k < settings.n_c {
            rho = rho_update(problem, &it, &res, &rho, settings.scale_clamp);
        }
        if settings.record_iterates {
            out.iterates.push(it);
        }
        if done {
            out.status = SolveStatus::Solved;
            break;
        }
    }

    out.x = x;
    out.z = z;
    out.y = y;
    if let Some(t) = start {
        out.wall_time_total = t.elapsed();
    }
    Ok(out)
}
