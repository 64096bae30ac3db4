use super::{axpy, dot, norm2, SpdOperator};
use crate::error::{Error, Result};
use crate::offline::ConjugateDirectionSet;
use crate::Scalar;

/// Cost and outcome of one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgTrace<T> {
    /// CG iterations, or coefficient steps for the conjugate-directions solver.
    pub iterations: usize,
    /// CG iterations spent polishing a conjugate-directions result.
    pub extra_iterations: usize,
    /// `‖M x − b‖₂ / max(‖b‖₂, ε)` evaluated on the returned `x`.
    pub final_relative_residual: T,
    pub flops: u64,
}

/// Residual vectors `r_0, r_1, …` recorded by [`cg_solve_with_residuals`].
pub type Residuals<T> = Vec<Vec<T>>;

fn vec_flops(n: usize) -> u64 {
    2 * n as u64
}

fn rhs_scale<T: Scalar>(b: &[T]) -> T {
    norm2(b).max(T::epsilon())
}

/// True relative residual of `x`, plus the flops spent computing it.
fn relative_residual<T: Scalar>(op: &SpdOperator<'_, T>, b: &[T], x: &[T]) -> (T, u64) {
    let mut mx = vec![T::zero(); op.n()];
    let mut flops = op.apply(x, &mut mx);
    let r: Vec<T> = mx.iter().zip(b).map(|(&a, &c)| a - c).collect();
    flops += 2 * vec_flops(op.n());
    (norm2(&r) / rhs_scale(b), flops)
}

/// Conjugate gradient for `M x = b` starting from `x0`.
///
/// Stops when the recursively updated residual satisfies
/// `‖r‖₂ ≤ rel_tol · max(‖b‖₂, ε)` or after `max_iter` iterations.
pub fn cg_solve<T: Scalar>(
    op: &SpdOperator<'_, T>,
    b: &[T],
    x0: &[T],
    rel_tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, CgTrace<T>)> {
    cg_impl(op, b, x0, rel_tol, max_iter, None)
}

/// [`cg_solve`] that also returns every residual `r_0, r_1, …` it produced.
pub fn cg_solve_with_residuals<T: Scalar>(
    op: &SpdOperator<'_, T>,
    b: &[T],
    x0: &[T],
    rel_tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, CgTrace<T>, Residuals<T>)> {
    let mut residuals = Vec::new();
    let (x, trace) = cg_impl(op, b, x0, rel_tol, max_iter, Some(&mut residuals))?;
    Ok((x, trace, residuals))
}

fn cg_impl<T: Scalar>(
    op: &SpdOperator<'_, T>,
    b: &[T],
    x0: &[T],
    rel_tol: T,
    max_iter: usize,
    mut record: Option<&mut Vec<Vec<T>>>,
) -> Result<(Vec<T>, CgTrace<T>)> {
    let n = op.n();
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch {
            field: "cg right-hand side",
            expected: n,
            found: b.len().min(x0.len()),
        });
    }
    if !(rel_tol > T::zero()) || max_iter == 0 {
        return Err(Error::InvalidSettings(
            "cg needs rel_tol > 0 and max_iter >= 1".into(),
        ));
    }

    let mut flops = vec_flops(n);
    let stop = rel_tol * rhs_scale(b);

    let mut x = x0.to_vec();
    let mut r = vec![T::zero(); n];
    flops += op.apply(&x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    flops += vec_flops(n);
    let mut p: Vec<T> = r.iter().map(|&v| -v).collect();
    let mut rr = dot(&r, &r);
    flops += vec_flops(n);
    if let Some(rec) = record.as_deref_mut() {
        rec.push(r.clone());
    }

    let mut mp = vec![T::zero(); n];
    let mut k = 0;
    while rr.sqrt() > stop && k < max_iter {
        flops += op.apply(&p, &mut mp);
        let curvature = dot(&p, &mp);
        flops += vec_flops(n);
        if !(curvature > T::zero()) {
            return Err(Error::CgBreakdown {
                iteration: k,
                curvature: curvature.to_f64_lossy(),
            });
        }
        let alpha = rr / curvature;
        axpy(alpha, &p, &mut x);
        axpy(alpha, &mp, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = -ri + beta * *pi;
        }
        flops += 4 * vec_flops(n);
        rr = rr_next;
        k += 1;
        if let Some(rec) = record.as_deref_mut() {
            rec.push(r.clone());
        }
    }

    let (final_relative_residual, check) = relative_residual(op, b, &x);
    Ok((
        x,
        CgTrace {
            iterations: k,
            extra_iterations: 0,
            final_relative_residual,
            flops: flops + check,
        },
    ))
}

/// Conjugate-directions solve from `x̄₀ = 0` using cached directions.
///
/// With `x̄₀ = 0` the step along `d_k` is `d_kᵀb / d_kᵀM d_k`, and the
/// denominator is read from the cache as `t1_k + s·t2_k`, so no operator
/// applications are needed for the solve itself. Exactly `n` coefficient
/// steps are taken. One apply is spent afterwards to report the residual.
pub fn cd_solve<T: Scalar>(
    op: &SpdOperator<'_, T>,
    b: &[T],
    dirs: &ConjugateDirectionSet<T>,
) -> Result<(Vec<T>, CgTrace<T>)> {
    let n = op.n();
    if b.len() != n || dirs.len() != n {
        return Err(Error::DimensionMismatch {
            field: "cd right-hand side",
            expected: n,
            found: if b.len() != n { b.len() } else { dirs.len() },
        });
    }
    let s = op.scale();
    let mut x = vec![T::zero(); n];
    let mut flops = 0;
    for (k, d) in dirs.directions().iter().enumerate() {
        let kappa = dirs.quadratic_form(k, s);
        if !(kappa > T::zero()) {
            return Err(Error::StaleCache {
                direction: k,
                value: kappa.to_f64_lossy(),
            });
        }
        let coeff = dot(d, b) / kappa;
        axpy(coeff, d, &mut x);
        flops += 2 * vec_flops(n);
    }
    flops += vec_flops(n);
    let (final_relative_residual, check) = relative_residual(op, b, &x);
    Ok((
        x,
        CgTrace {
            iterations: n,
            extra_iterations: 0,
            final_relative_residual,
            flops: flops + check,
        },
    ))
}

/// [`cd_solve`], followed by at most `max_extra` warm-started CG iterations
/// when the cached directions leave a residual above `rel_tol`.
pub fn cd_then_cg_polish<T: Scalar>(
    op: &SpdOperator<'_, T>,
    b: &[T],
    dirs: &ConjugateDirectionSet<T>,
    rel_tol: T,
    max_extra: usize,
) -> Result<(Vec<T>, CgTrace<T>)> {
    let (x, trace) = cd_solve(op, b, dirs)?;
    if trace.final_relative_residual <= rel_tol || max_extra == 0 {
        return Ok((x, trace));
    }
    let (x, polish) = cg_solve(op, b, &x, rel_tol, max_extra)?;
    Ok((
        x,
        CgTrace {
            iterations: trace.iterations,
            extra_iterations: polish.iterations,
            final_relative_residual: polish.final_relative_residual,
            flops: trace.flops + polish.flops,
        },
    ))
}
