//! For NLP instances WCR is constant rank of the active gradients. The oracle
//! recomputes those ranks from the analytic gradients.

mod common;

use common::*;
use conic_cert::certificates::{wcr_check, Tolerances};
use conic_cert::parse_problem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn rank(rows: &[DVector<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>());
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-8 * top.max(1e-300)).count()
}

/// Active inequalities `g_j(x) = a_jᵀd + ½ dᵀP_j d` with `d = x − x*`.
struct Active {
    a: DVector<f64>,
    p: DMatrix<f64>,
}

fn oracle_constant_rank(cons: &[Active], xs: &DVector<f64>, r: &mut rand_chacha::ChaCha8Rng) -> bool {
    let at = |x: &DVector<f64>| {
        let d = x - xs;
        cons.iter().map(|c| &c.a + &c.p * &d).collect::<Vec<_>>()
    };
    let r0 = rank(&at(xs));
    (0..64).all(|_| rank(&at(&(xs + random_vec(r, xs.len(), 1e-3)))) == r0)
}

fn build(xs: &DVector<f64>, cons: &[Active]) -> String {
    let mut text = format!("vars {}\nminimize 0\n", xs.len());
    for c in cons {
        text += &format!("cone lorentz 1: {}\n", quad_text(xs, &c.a, &c.p, 0.0));
    }
    text
}

#[test]
fn wcr_matches_active_gradient_ranks() {
    let mut r = rng(21);
    let tol = Tolerances::default();
    let (mut holds, mut fails) = (0, 0);
    for i in 0..20 {
        let n = r.gen_range(2..=4);
        let xs = random_vec(&mut r, n, 1.0);
        let a = random_vec(&mut r, n, 1.0);
        let b = random_vec(&mut r, n, 1.0);
        let zero = DMatrix::zeros(n, n);
        // Two active constraints with parallel gradients at x*. Either they stay
        // parallel (linear, scaled copies) or curvature separates them.
        let second = if i % 2 == 0 {
            Active { a: &a * 2.0, p: zero.clone() }
        } else {
            Active { a: a.clone(), p: &b * b.transpose() * 2.0 }
        };
        let cons = [Active { a: a.clone(), p: zero }, second];
        let inst = parse_problem(&build(&xs, &cons)).unwrap();
        let want = oracle_constant_rank(&cons, &xs, &mut r);
        let got = wcr_check(&inst, &xs, 1e-3, 64, &tol, i).unwrap();
        assert_eq!(got.verdict.holds(), want, "instance {i}: {:?}", got);
        assert_eq!(got.rank_at_point, 1);
        if want {
            holds += 1;
        } else {
            fails += 1;
        }
    }
    assert!(holds > 0 && fails > 0);
}

#[test]
fn wcr_holds_on_random_nlp() {
    let mut r = rng(22);
    let tol = Tolerances::default();
    for i in 0..20 {
        let p = random_nlp(&mut r);
        let mut rr = rng(i);
        let active: Vec<Active> = p
            .ineq
            .iter()
            .filter(|(_, _, on)| *on)
            .map(|(a, pm, _)| Active { a: a.clone(), p: pm.clone() })
            .chain(p.eq.iter().map(|(b, rm)| Active { a: b.clone(), p: rm.clone() }))
            .collect();
        let want = oracle_constant_rank(&active, &p.x, &mut rr);
        let got = wcr_check(&p.inst, &p.x, 1e-4, 32, &tol, i).unwrap();
        assert_eq!(got.verdict.holds(), want, "{}", p.text);
    }
}
