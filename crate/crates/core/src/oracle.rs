//! Brute-force active-set oracle for small QPs.
//!
//! Every constraint is assigned one of {at lower, at upper, inactive} and the
//! equality-constrained stationarity system
//!
//! ```text
//! [ P    A_Wᵀ ] [ x   ]   [ -q  ]
//! [ A_W  0    ] [ y_W ] = [ b_W ]
//! ```
//!
//! is solved for each assignment. Candidates that are primal feasible with
//! correct multiplier signs are kept and the one with the smallest objective
//! wins. The result is independent of the ADMM code path.

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, norm_inf, Matrix};
use crate::qp::QpProblem;
use crate::Scalar;

/// Largest constraint count accepted; `3^12 = 531441` candidate systems.
pub const ORACLE_MAX_CONSTRAINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport<T> {
    pub stationarity_norm: T,
    pub feasibility_norm: T,
    pub complementarity_norm: T,
    pub passed: bool,
}

impl<T: Scalar> KktReport<T> {
    /// KKT violation of `(x, y)`; `y` follows the `Ax = z` multiplier sign
    /// convention (negative at an active lower bound, positive at an upper).
    pub fn evaluate(problem: &QpProblem<T>, x: &[T], y: &[T], tol: T) -> Self {
        let px = problem.p().matvec(x);
        let aty = problem.a().matvec_t(y);
        let stat: Vec<T> = px
            .iter()
            .zip(problem.q())
            .zip(&aty)
            .map(|((&p, &q), &a)| p + q + a)
            .collect();
        let ax = problem.a().matvec(x);
        let mut feas = T::zero();
        let mut comp = T::zero();
        for i in 0..problem.m() {
            let (li, ui, axi, yi) = (problem.l()[i], problem.u()[i], ax[i], y[i]);
            feas = feas.max(li - axi).max(axi - ui);
            let upper_gap = if ui.is_finite() {
                (ui - axi).abs()
            } else {
                T::one()
            };
            let lower_gap = if li.is_finite() {
                (axi - li).abs()
            } else {
                T::one()
            };
            let c = yi.max(T::zero()) * upper_gap + (-yi).max(T::zero()) * lower_gap;
            comp = comp.max(c);
        }
        let stationarity_norm = norm_inf(&stat);
        Self {
            stationarity_norm,
            feasibility_norm: feas,
            complementarity_norm: comp,
            passed: stationarity_norm <= tol && feas <= tol && comp <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Inactive,
    Lower,
    Upper,
}

/// Optimal `(x*, y*)` by exhaustive active-set enumeration.
///
/// Singular candidate systems are skipped. Feasibility and sign tests use
/// `tol`, scaled by the bound magnitude for feasibility.
pub fn kkt_oracle<T: Scalar>(
    problem: &QpProblem<T>,
    tol: T,
) -> Result<(Vec<T>, Vec<T>, KktReport<T>)> {
    let (n, m) = (problem.n(), problem.m());
    if m > ORACLE_MAX_CONSTRAINTS {
        return Err(Error::OracleTooLarge {
            m,
            limit: ORACLE_MAX_CONSTRAINTS,
        });
    }

    let choices: Vec<Vec<Role>> = (0..m)
        .map(|i| {
            let (li, ui) = (problem.l()[i], problem.u()[i]);
            if li == ui {
                // equality: pinned, sign-free multiplier
                vec![Role::Lower]
            } else {
                let mut c = vec![Role::Inactive];
                if li.is_finite() {
                    c.push(Role::Lower);
                }
                if ui.is_finite() {
                    c.push(Role::Upper);
                }
                c
            }
        })
        .collect();

    let mut best: Option<(T, Vec<T>, Vec<T>)> = None;
    let mut idx = vec![0usize; m];
    loop {
        let roles: Vec<Role> = idx.iter().zip(&choices).map(|(&k, c)| c[k]).collect();
        if let Some((x, y)) = solve_candidate(problem, &roles, tol) {
            let obj = problem.objective(&x);
            if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
                best = Some((obj, x, y));
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == m {
                let (_, x, y) = best.ok_or(Error::NoFeasibleCandidate)?;
                let report = KktReport::evaluate(problem, &x, &y, tol);
                debug_assert_eq!(x.len(), n);
                return Ok((x, y, report));
            }
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn solve_candidate<T: Scalar>(
    problem: &QpProblem<T>,
    roles: &[Role],
    tol: T,
) -> Option<(Vec<T>, Vec<T>)> {
    let n = problem.n();
    let active: Vec<usize> = roles
        .iter()
        .enumerate()
        .filter(|(_, r)| **r != Role::Inactive)
        .map(|(i, _)| i)
        .collect();
    let k = active.len();
    let size = n + k;
    let mut kkt = Matrix::zeros(size, size);
    let mut rhs = vec![T::zero(); size];
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = problem.p()[(i, j)];
        }
        rhs[i] = -problem.q()[i];
    }
    for (w, &row) in active.iter().enumerate() {
        for j in 0..n {
            let a = problem.a()[(row, j)];
            kkt[(n + w, j)] = a;
            kkt[(j, n + w)] = a;
        }
        rhs[n + w] = match roles[row] {
            Role::Upper => problem.u()[row],
            _ => problem.l()[row],
        };
    }
    let sol = lu_solve(&kkt, &rhs).ok()?;
    let x = sol[..n].to_vec();
    let mut y = vec![T::zero(); problem.m()];
    for (w, &row) in active.iter().enumerate() {
        y[row] = sol[n + w];
    }

    let ax = problem.a().matvec(&x);
    for i in 0..problem.m() {
        let (li, ui) = (problem.l()[i], problem.u()[i]);
        if ax[i] < li - tol * (T::one() + li.abs()) || ax[i] > ui + tol * (T::one() + ui.abs()) {
            return None;
        }
        let sign_ok = match roles[i] {
            _ if li == ui => true,
            Role::Lower => y[i] <= tol,
            Role::Upper => y[i] >= -tol,
            Role::Inactive => y[i].abs() <= tol,
        };
        if !sign_ok {
            return None;
        }
    }
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn scalar_problem(l: f64, u: f64) -> QpProblem<f64> {
        QpProblem::new(
            Matrix::identity(1),
            vec![1.0],
            Matrix::identity(1),
            vec![l],
            vec![u],
        )
        .unwrap()
    }

    #[test]
    fn interior_optimum() {
        let (x, y, rep) = kkt_oracle(&scalar_problem(-2.0, 2.0), 1e-10).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-14);
        assert_eq!(y[0], 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn active_lower_bound() {
        let (x, y, rep) = kkt_oracle(&scalar_problem(0.0, 2.0), 1e-10).unwrap();
        assert!(x[0].abs() < 1e-14);
        assert!((y[0] + 1.0).abs() < 1e-14);
        assert!(rep.passed);
    }

    #[test]
    fn equality_constraint_multiplier_is_unsigned() {
        // min ½x² + x, x = 1 -> y = -2
        let (x, y, rep) = kkt_oracle(&scalar_problem(1.0, 1.0), 1e-10).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((y[0] + 2.0).abs() < 1e-14);
        assert!(rep.passed);
    }

    #[test]
    fn one_sided_bound() {
        // min ½x² + x with x ≥ 0 only (upper infinite)
        let (x, _, rep) = kkt_oracle(&scalar_problem(0.0, f64::INFINITY), 1e-10).unwrap();
        assert!(x[0].abs() < 1e-14);
        assert!(rep.passed);
    }

    #[test]
    fn example_problem_passes_at_tight_tolerance() {
        let p = crate::qp::tests::example_problem();
        let (x, y, rep) = kkt_oracle(&p, 1e-8).unwrap();
        assert!(rep.passed, "{rep:?}");
        let ax = p.a().matvec(&x);
        for ((&v, &lo), &hi) in ax.iter().zip(p.l()).zip(p.u()) {
            assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
        assert_eq!(y.len(), 4);
    }

    #[test]
    fn refuses_large_problems() {
        let m = ORACLE_MAX_CONSTRAINTS + 1;
        let p = QpProblem::new(
            Matrix::identity(1),
            vec![0.0],
            Matrix::from_row_major(m, 1, vec![1.0; m]).unwrap(),
            vec![-1.0; m],
            vec![1.0; m],
        )
        .unwrap();
        assert!(matches!(
            kkt_oracle(&p, 1e-8),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    fn spd_problem() -> impl Strategy<Value = QpProblem<f64>> {
        (1usize..=4).prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0f64..1.0, n * n),
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(-1.0f64..1.0, n * n),
                prop::collection::vec((-2.0f64..0.5, 0.1f64..2.0), n),
            )
                .prop_map(move |(b, q, a, lw)| {
                    let b = Matrix::from_row_major(n, n, b).unwrap();
                    let p = b.transpose().matmul(&b).add_diag(0.5);
                    let a = Matrix::from_row_major(n, n, a).unwrap().add_diag(4.5);
                    let (l, u) = lw.into_iter().map(|(l, w)| (l, l + w)).unzip();
                    QpProblem::new(p, q, a, l, u).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn oracle_is_self_consistent(problem in spd_problem()) {
            let (x, y, _) = kkt_oracle(&problem, 1e-9).unwrap();
            let stat: Vec<f64> = problem.p().matvec(&x).iter()
                .zip(problem.q())
                .zip(problem.a().matvec_t(&y))
                .map(|((p, q), a)| p + q + a)
                .collect();
            prop_assert!(norm_inf(&stat) <= 1e-8);
            let ax = problem.a().matvec(&x);
            for ((&v, &lo), &hi) in ax.iter().zip(problem.l()).zip(problem.u()) {
                prop_assert!(v >= lo - 1e-8 && v <= hi + 1e-8);
            }
        }
    }
}
