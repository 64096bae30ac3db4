mod common;

use cdqp::{
    compute_offline, kkt_oracle, rho_init, solve, AugmentationMatrix, Backend,
    ConjugateDirectionSet, Matrix, QpProblem, RhoMode, SolveStatus, SolverSettings,
};
use common::{example_problem, max_abs_diff, random_problem, rng};
use proptest::prelude::*;
use rand::Rng;

fn offline_for(prob: &QpProblem<f64>) -> (ConjugateDirectionSet<f64>, AugmentationMatrix<f64>) {
    compute_offline(prob, 1e-4, &rho_init(prob, 0.1).unwrap()).unwrap()
}

fn settings(backend: Backend) -> SolverSettings<f64> {
    SolverSettings {
        backend,
        record_iterates: true,
        ..SolverSettings::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_respect_structural_invariants(seed in 0u64..10_000, n in 2usize..6, extra in 0usize..3) {
        let mut r = rng(seed);
        let prob = random_problem(&mut r, n, extra);
        let (dirs, rho) = offline_for(&prob);
        let x0: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        for backend in [Backend::CachedCd, Backend::Cg] {
            let s = settings(backend);
            let res = solve(&prob, &s, Some((&dirs, &rho)), &x0).unwrap();
            prop_assert_ne!(res.status, SolveStatus::InnerFailure);
            prop_assert_eq!(res.residual_history.len(), res.outer_iterations);
            prop_assert_eq!(res.rho_scale_history.len(), res.outer_iterations);
            prop_assert_eq!(res.iterates.len(), res.outer_iterations);
            for it in &res.iterates {
                for ((zi, li), ui) in it.z.iter().zip(prob.l()).zip(prob.u()) {
                    prop_assert!(li <= zi && zi <= ui);
                }
            }
            for &sc in &res.rho_scale_history {
                prop_assert!((s.scale_clamp.0..=s.scale_clamp.1).contains(&sc));
            }
            prop_assert_eq!(res.rho_scale_history[0], 1.0);
            if res.rho_scale_history.len() > s.n_c {
                let frozen = res.rho_scale_history[s.n_c];
                prop_assert!(res.rho_scale_history[s.n_c..].iter().all(|&v| v == frozen));
            }
            prop_assert!(res.inner_flops_history.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(res.inner_flops_history.last().copied(), Some(res.inner_flops_total));
            if res.status == SolveStatus::Solved {
                let last = res.residual_history.last().unwrap();
                prop_assert!(last.prim_2 < s.eps_prim && last.dual_2 < s.eps_dual);
            }
        }
    }

    #[test]
    fn backends_produce_matching_histories(seed in 0u64..10_000, n in 2usize..6, extra in 0usize..3) {
        let mut r = rng(seed);
        let prob = random_problem(&mut r, n, extra);
        let (dirs, rho) = offline_for(&prob);
        let x0: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let tight = |b| SolverSettings { inner_rel_tol: 1e-12, inner_max: Some(40 * n), ..settings(b) };
        let cd = solve(&prob, &tight(Backend::CachedCd), Some((&dirs, &rho)), &x0).unwrap();
        let cg = solve(&prob, &tight(Backend::Cg), Some((&dirs, &rho)), &x0).unwrap();
        let common_len = cd.outer_iterations.min(cg.outer_iterations);
        for k in 0..common_len {
            let (a, b) = (cd.residual_history[k], cg.residual_history[k]);
            let scale = 1.0 + a.prim_2.max(a.dual_2);
            prop_assert!((a.prim_2 - b.prim_2).abs() <= 1e-6 * scale, "k {k}: prim {} vs {}", a.prim_2, b.prim_2);
            prop_assert!((a.dual_2 - b.dual_2).abs() <= 1e-6 * scale, "k {k}: dual {} vs {}", a.dual_2, b.dual_2);
        }
        prop_assert!(cd.outer_iterations.abs_diff(cg.outer_iterations) <= 1);
    }
}

#[test]
fn solved_points_match_the_active_set_oracle() {
    let mut r = rng(2024);
    let mut checked = 0;
    for _ in 0..30 {
        let n = r.gen_range(2..5);
        let extra = r.gen_range(0..3);
        let prob = random_problem(&mut r, n, extra);
        let (dirs, rho) = offline_for(&prob);
        let s = SolverSettings {
            eps_prim: 1e-7,
            eps_dual: 1e-7,
            max_outer: 20_000,
            ..SolverSettings::default()
        };
        let res = solve(&prob, &s, Some((&dirs, &rho)), &vec![0.0; n]).unwrap();
        if res.status != SolveStatus::Solved {
            continue;
        }
        let (x_star, _, report) = kkt_oracle(&prob, 1e-9).unwrap();
        assert!(report.passed);
        assert!(
            max_abs_diff(&res.x, &x_star) < 1e-4,
            "{:?} vs {:?}",
            res.x,
            x_star
        );
        checked += 1;
    }
    assert!(checked >= 25, "only {checked} of 30 runs solved");
}

#[test]
fn starting_at_the_solution_stops_immediately() {
    // with l = u = Ax*, y* = 0 and x* = -P⁻¹q unconstrained-optimal,
    // x⁰ = x* is already a fixed point of the iteration
    let p = Matrix::from_f64_rows(&[[4.0, 1.0], [1.0, 3.0]]);
    let q = vec![-1.0, -2.0];
    let x_star = cdqp::linalg::lu_solve(&p, &[1.0, 2.0]).unwrap();
    let a = Matrix::identity(2);
    let prob = QpProblem::new(p, q, a, vec![-10.0; 2], vec![10.0; 2]).unwrap();
    let (dirs, rho) = offline_for(&prob);
    for backend in [Backend::CachedCd, Backend::Cg] {
        let res = solve(&prob, &settings(backend), Some((&dirs, &rho)), &x_star).unwrap();
        assert_eq!(res.status, SolveStatus::Solved);
        assert_eq!(res.outer_iterations, 1);
        assert!(max_abs_diff(&res.x, &x_star) < 1e-9);
    }
}

#[test]
fn solves_are_deterministic() {
    let prob = example_problem();
    let (dirs, rho) = offline_for(&prob);
    for backend in [Backend::CachedCd, Backend::Cg] {
        let s = settings(backend);
        let a = solve(&prob, &s, Some((&dirs, &rho)), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = solve(&prob, &s, Some((&dirs, &rho)), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn max_outer_caps_the_history() {
    let prob = example_problem();
    let (dirs, rho) = offline_for(&prob);
    let s = SolverSettings {
        max_outer: 3,
        ..settings(Backend::CachedCd)
    };
    let res = solve(&prob, &s, Some((&dirs, &rho)), &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(res.status, SolveStatus::MaxIterations);
    assert_eq!(res.outer_iterations, 3);
    assert_eq!(res.residual_history.len(), 3);
}

#[test]
fn standard_mode_with_cg_needs_no_cache() {
    let prob = example_problem();
    let s = SolverSettings {
        backend: Backend::Cg,
        rho_mode: RhoMode::Standard,
        rho_bar: 0.2,
        ..SolverSettings::default()
    };
    let res = solve(&prob, &s, None, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
}

#[test]
fn single_precision_smoke() {
    let p = Matrix::<f32>::from_f64_rows(&[
        [3.0, 1.0, 3.0, 2.0],
        [1.0, 1.0, 2.0, 1.0],
        [3.0, 2.0, 8.0, 4.0],
        [2.0, 1.0, 4.0, 3.0],
    ]);
    let prob = QpProblem::new(
        p,
        vec![1.0f32; 4],
        Matrix::identity(4),
        vec![-2.0, -1.0, -3.0, -4.0],
        vec![10.0, 1.0, 3.0, 0.0],
    )
    .unwrap();
    let (dirs, rho) = compute_offline(&prob, 1e-4f32, &rho_init(&prob, 0.1f32).unwrap()).unwrap();
    let s = SolverSettings::<f32> {
        eps_prim: 1e-3,
        eps_dual: 1e-3,
        inner_rel_tol: 1e-5,
        ..SolverSettings::default()
    };
    let res = solve(&prob, &s, Some((&dirs, &rho)), &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
    let (x64, _, _) = kkt_oracle(&example_problem(), 1e-9).unwrap();
    for (a, b) in res.x.iter().zip(&x64) {
        assert!((*a as f64 - b).abs() < 1e-2, "{a} vs {b}");
    }
}
