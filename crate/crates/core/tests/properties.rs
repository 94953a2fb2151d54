//! Property tests for projections, differentiation, the problem model and the
//! penalty solver.

mod common;

use common::*;
use conic_cert::cone::{self, blocks_inner, project_block};
use conic_cert::harness::corpus::{bundled_corpus_dir, run_corpus};
use conic_cert::model::{eval_jet, eval_value, parse_expr, Multipliers};
use conic_cert::penalty::{penalty_multipliers, penalty_value_grad, SolveStatus};
use conic_cert::{parse_problem, BlockKind, BlockPoint, SymMat};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

fn kind_strategy() -> impl Strategy<Value = BlockKind> {
    prop_oneof![(1usize..=6).prop_map(BlockKind::Lorentz), (1usize..=5).prop_map(BlockKind::Psd)]
}

fn point(seed: u64, kind: BlockKind, scale: f64) -> BlockPoint {
    let mut r = rng(seed);
    match kind {
        BlockKind::Lorentz(m) => BlockPoint::Lorentz(random_vec(&mut r, m, scale)),
        BlockKind::Psd(m) => BlockPoint::Psd(SymMat::from_full(&random_sym(&mut r, m, scale))),
    }
}

proptest! {
    #[test]
    fn projection_lands_in_cone_and_is_idempotent(kind in kind_strategy(), seed: u64, scale in 1e-3f64..1e3) {
        let w = point(seed, kind, scale);
        let p = project_block(&w).unwrap();
        prop_assert!(cone::cone_margin(&p).unwrap() >= -1e-12 * scale.max(1.0));
        prop_assert!(project_block(&p).unwrap().sub(&p).norm() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn projection_is_nonexpansive(kind in kind_strategy(), s1: u64, s2: u64) {
        let (a, b) = (point(s1, kind, 3.0), point(s2, kind, 3.0));
        let d = project_block(&a).unwrap().sub(&project_block(&b).unwrap()).norm();
        prop_assert!(d <= a.sub(&b).norm() + 1e-12);
    }

    #[test]
    fn moreau_decomposition(kind in kind_strategy(), seed: u64) {
        let w = point(seed, kind, 5.0);
        let (plus, minus) = cone::moreau_decompose(&w, kind).unwrap();
        prop_assert!(plus.sub(&minus).sub(&w).norm() <= 1e-10);
        prop_assert!(plus.inner(&minus).abs() <= 1e-9);
    }

    #[test]
    fn jet_matches_finite_differences(seed: u64) {
        let mut r = rng(seed);
        let text = random_expr(&mut r, 3, 3);
        let expr = parse_expr(&text, 3).unwrap();
        let x = random_vec(&mut r, 3, 1.0);
        let jet = eval_jet(&expr, x.as_slice()).unwrap();
        prop_assert!((jet.value - eval_value(&expr, x.as_slice()).unwrap()).abs() <= 1e-12 * jet.value.abs().max(1.0));
        let f = |y: &DVector<f64>| eval_value(&expr, y.as_slice()).unwrap();
        let g = fd_grad(&f, &x, 1e-5);
        for i in 0..3 {
            prop_assert!(rel_err(jet.grad[i], g[i]) <= 1e-5, "{text}: {} vs {}", jet.grad[i], g[i]);
        }
        prop_assert!((&jet.hess - jet.hess.transpose()).amax() == 0.0);
    }

    #[test]
    fn printed_expressions_parse_back(seed: u64) {
        let mut r = rng(seed);
        let text = random_expr(&mut r, 4, 4);
        let expr = parse_expr(&text, 4).unwrap();
        let again = parse_expr(&expr.to_string(), 4).unwrap();
        prop_assert_eq!(expr, again);
    }

    #[test]
    fn penalty_gradient_is_lagrangian_gradient_at_penalty_multipliers(seed: u64, rho in 1e-2f64..1e4) {
        let mut r = rng(seed);
        let problems = corpus_instances();
        let (name, inst) = &problems[r.gen_range(0..problems.len())];
        let x = random_vec(&mut r, inst.n(), 1.5);
        let (_, grad) = penalty_value_grad(inst, &x, rho, None).unwrap();
        let m = penalty_multipliers(&inst.evaluate(&x).unwrap(), rho).unwrap();
        let lg = inst.lagrangian_grad(&x, &m).unwrap();
        prop_assert!((&grad - &lg).amax() <= 1e-10 * grad.amax().max(1.0), "{name}");
        // Penalty multipliers lie in the cone.
        for w in &m.omega {
            prop_assert!(project_block(&w.neg()).unwrap().norm() <= 1e-12 * w.norm().max(1.0), "{name}");
        }
    }
}

#[test]
fn adjoint_identity_on_corpus() {
    let mut r = rng(11);
    for (name, inst) in corpus_instances() {
        for _ in 0..500 {
            let x = random_vec(&mut r, inst.n(), 2.0);
            let d = random_vec(&mut r, inst.n(), 1.0);
            let w = random_blocks(&mut r, &inst, 1.0);
            let lhs = blocks_inner(&inst.eval_dg_apply(&x, &d).unwrap(), &w);
            let rhs = d.dot(&inst.eval_dg_adjoint(&x, &w).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{name}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn second_derivative_adjoint_is_symmetric() {
    let mut r = rng(12);
    for (name, inst) in corpus_instances() {
        for _ in 0..50 {
            let x = random_vec(&mut r, inst.n(), 2.0);
            let w = random_blocks(&mut r, &inst, 1.0);
            let h = inst.eval_d2g_adjoint(&x, &w).unwrap();
            assert_eq!(h, h.transpose(), "{name}");
        }
    }
}

#[test]
fn corpus_problems_round_trip_through_text() {
    for (name, inst) in corpus_instances() {
        let again = parse_problem(&inst.to_text()).unwrap();
        assert_eq!(inst, again, "{name}");
    }
}

#[test]
fn penalty_gradient_matches_finite_differences() {
    let mut r = rng(13);
    for (name, inst) in corpus_instances() {
        for _ in 0..20 {
            let x = random_vec(&mut r, inst.n(), 1.5);
            let c = random_vec(&mut r, inst.n(), 1.0);
            let rho = 10f64.powf(r.gen_range(-1.0..3.0));
            let (_, grad) = penalty_value_grad(&inst, &x, rho, Some(&c)).unwrap();
            let f = |y: &DVector<f64>| penalty_value_grad(&inst, y, rho, Some(&c)).unwrap().0;
            let fd = fd_grad(&f, &x, 1e-6);
            for i in 0..inst.n() {
                assert!(rel_err(grad[i], fd[i]) <= 1e-5 * rho.max(1.0), "{name}: {} vs {}", grad[i], fd[i]);
            }
        }
    }
}

#[test]
fn solver_traces_on_corpus() {
    let doc = run_corpus(&bundled_corpus_dir(), 2, 42).unwrap();
    for p in &doc.problems {
        let rows = &p.trace.as_ref().unwrap().rows;
        // Φ does not increase across outer iterations.
        for pair in rows.windows(2) {
            let (a, b) = (pair[0].diagnostics.phi, pair[1].diagnostics.phi);
            assert!(b <= a * (1.0 + 1e-9) + 1e-300, "{}: Φ rose from {a:e} to {b:e}", p.name);
        }
        if p.status == Some(SolveStatus::ConvergedKkt) {
            let tol = p.solver_config.as_ref().unwrap().outer_tol;
            let kkt = p.certificate.as_ref().unwrap().kkt.max();
            assert!(kkt <= 10.0 * tol, "{}: KKT residual {kkt:e} after convergence", p.name);
        }
    }
}

#[test]
fn zero_multipliers_are_kkt_only_at_unconstrained_minimizers() {
    let inst = parse_problem("vars 2\nminimize (x1 - 0.5)^2 + x2^2\ncone lorentz 3: 2, x1, x2\n").unwrap();
    let m = Multipliers::zeros(&inst);
    let at = |x: &[f64]| conic_cert::certificates::kkt_residual(&inst, &DVector::from_column_slice(x), &m).unwrap().max();
    assert!(at(&[0.5, 0.0]) <= 1e-15);
    assert!(at(&[0.4, 0.0]) > 0.1);
}
