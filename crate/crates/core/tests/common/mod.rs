//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use conic_cert::model::Multipliers;
use conic_cert::{parse_problem, BlockPoint, ProblemInstance};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.gen_range(-scale..scale))
}

pub fn random_sym(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

/// Parenthesised literal the problem grammar accepts.
pub fn lit(x: f64) -> String {
    format!("({x:e})")
}

/// Random well-defined expression text in `x1..xn`, depth bounded.
pub fn random_expr(r: &mut ChaCha8Rng, n: usize, depth: usize) -> String {
    if depth == 0 || r.gen_bool(0.2) {
        return if r.gen_bool(0.7) {
            format!("x{}", r.gen_range(1..=n))
        } else {
            lit(r.gen_range(-2.0..2.0))
        };
    }
    let a = random_expr(r, n, depth - 1);
    match r.gen_range(0..11) {
        0 => format!("({a} + {})", random_expr(r, n, depth - 1)),
        1 => format!("({a} - {})", random_expr(r, n, depth - 1)),
        2 | 3 => format!("({a} * {})", random_expr(r, n, depth - 1)),
        4 => format!("({a} / (2 + cos({})))", random_expr(r, n, depth - 1)),
        5 => format!("sin({a})"),
        6 => format!("cos({a})"),
        7 => format!("exp(0.5*sin({a}))"),
        8 => format!("log(1 + ({a})^2)"),
        9 => format!("sqrt(1 + ({a})^2)"),
        _ => format!("({a})^{}", r.gen_range(2..4)),
    }
}

/// Central-difference gradient.
pub fn fd_grad(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut p = x.clone();
        let mut m = x.clone();
        p[i] += h;
        m[i] -= h;
        (f(&p) - f(&m)) / (2.0 * h)
    })
}

/// Second-order central differences of values only.
pub fn fd_hess(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let at = |i: usize, si: f64, j: usize, sj: f64| {
        let mut y = x.clone();
        y[i] += si * h;
        y[j] += sj * h;
        f(&y)
    };
    DMatrix::from_fn(n, n, |i, j| {
        (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0) + at(i, -1.0, j, -1.0)) / (4.0 * h * h)
    })
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// A random NLP instance (every cone block is `L¹`) together with a KKT
/// point built into it and the analytic Hessians the oracle needs.
pub struct NlpInstance {
    pub text: String,
    pub inst: ProblemInstance,
    pub x: DVector<f64>,
    pub multipliers: Multipliers,
    /// Hessian of the objective.
    pub q: DMatrix<f64>,
    /// Gradients and Hessians of the inequality functions at `x`.
    pub ineq: Vec<(DVector<f64>, DMatrix<f64>, bool)>,
    pub eq: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub omega: Vec<f64>,
    pub mu: Vec<f64>,
}

pub fn quad_text(c: &DVector<f64>, a: &DVector<f64>, p: &DMatrix<f64>, s: f64) -> String {
    let n = c.len();
    let d = |i: usize| format!("(x{} - {})", i + 1, lit(c[i]));
    let mut terms = vec![lit(s)];
    for i in 0..n {
        terms.push(format!("{}*{}", lit(a[i]), d(i)));
    }
    for i in 0..n {
        for j in 0..n {
            terms.push(format!("{}*{}*{}", lit(0.5 * p[(i, j)]), d(i), d(j)));
        }
    }
    terms.join(" + ")
}

pub fn random_nlp(r: &mut ChaCha8Rng) -> NlpInstance {
    let n = r.gen_range(2..=4);
    let xs = random_vec(r, n, 1.0);
    let n_ineq = r.gen_range(1..=3);
    let n_eq = r.gen_range(0..=1);
    let mut text = format!("vars {n}\n");
    let mut ineq = Vec::new();
    let mut omega = Vec::new();
    let mut grad_sum = DVector::zeros(n);
    let mut cones = String::new();
    for _ in 0..n_ineq {
        let a = random_vec(r, n, 1.0);
        let p = random_sym(r, n, 1.0);
        let active = r.gen_bool(0.7);
        let s = if active { 0.0 } else { r.gen_range(0.5..1.0) };
        let w = if active { r.gen_range(0.5..2.0) } else { 0.0 };
        grad_sum += &a * w;
        cones += &format!("cone lorentz 1: {}\n", quad_text(&xs, &a, &p, s));
        ineq.push((a, p, active));
        omega.push(w);
    }
    let mut eq = Vec::new();
    let mut mu = Vec::new();
    let mut eqs = String::new();
    for _ in 0..n_eq {
        let b = random_vec(r, n, 1.0);
        let rr = random_sym(r, n, 1.0);
        let m = r.gen_range(-1.0..1.0);
        grad_sum -= &b * m;
        eqs += &format!("eq: {}\n", quad_text(&xs, &b, &rr, 0.0));
        eq.push((b, rr));
        mu.push(m);
    }
    // ∇f(x*) = Σ ω_j ∇g_j − Σ μ_i ∇h_i makes x* a KKT point.
    let q = random_sym(r, n, 2.0);
    text += &format!("minimize {}\n", quad_text(&xs, &grad_sum, &q, 0.0));
    text += &cones;
    text += &eqs;
    let inst = parse_problem(&text).expect("generated NLP parses");
    let multipliers = Multipliers {
        omega: omega.iter().map(|&w| BlockPoint::lorentz(&[w])).collect(),
        mu: DVector::from_vec(mu.clone()),
    };
    NlpInstance {
        text,
        inst,
        x: xs,
        multipliers,
        q,
        ineq,
        eq,
        omega,
        mu,
    }
}

/// Orthonormal basis of `{d : rows·d = 0}` by Gram-Schmidt on the row space
/// followed by completion against the unit vectors.
pub fn gram_schmidt_null_space(rows: &[DVector<f64>], n: usize) -> Vec<DVector<f64>> {
    let mut span: Vec<DVector<f64>> = Vec::new();
    let orth = |v: &DVector<f64>, basis: &[DVector<f64>]| {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in basis {
                w -= b * b.dot(&w);
            }
        }
        w
    };
    for r in rows {
        let w = orth(r, &span);
        if w.norm() > 1e-9 * r.norm().max(1.0) {
            span.push(w.normalize());
        }
    }
    let mut null = Vec::new();
    for i in 0..n {
        let e = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
        let all: Vec<DVector<f64>> = span.iter().chain(null.iter()).cloned().collect();
        let w = orth(&e, &all);
        if w.norm() > 1e-6 {
            null.push(w.normalize());
        }
    }
    null
}

/// Classical reduced-Hessian test on the active set: the smallest eigenvalue
/// of `Zᵀ ∇²L Z` with `Z` spanning the kernel of the active gradients.
/// `None` when that kernel is trivial.
pub fn nlp_reduced_hessian_min(p: &NlpInstance) -> Option<f64> {
    let n = p.x.len();
    let mut h = p.q.clone();
    let mut rows = Vec::new();
    for ((a, pj, active), w) in p.ineq.iter().zip(&p.omega) {
        h -= pj * *w;
        if *active {
            rows.push(a.clone());
        }
    }
    for ((b, rr), m) in p.eq.iter().zip(&p.mu) {
        h += rr * *m;
        rows.push(b.clone());
    }
    let z = gram_schmidt_null_space(&rows, n);
    if z.is_empty() {
        return None;
    }
    let zm = DMatrix::from_columns(&z);
    let red = zm.transpose() * h * &zm;
    let red = (&red + red.transpose()) * 0.5;
    Some(red.symmetric_eigenvalues().min())
}

/// Every problem of the bundled corpus with its manifest name.
pub fn corpus_instances() -> Vec<(String, ProblemInstance)> {
    use conic_cert::harness::corpus::{bundled_corpus_dir, load_manifest, load_problem};
    let dir = bundled_corpus_dir();
    load_manifest(&dir)
        .expect("manifest loads")
        .problems
        .iter()
        .map(|e| (e.name.clone(), load_problem(&dir.join(&e.file)).expect("corpus problem parses")))
        .collect()
}

/// Random point of the same shape as the constraint values of `inst`.
pub fn random_blocks(r: &mut ChaCha8Rng, inst: &ProblemInstance, scale: f64) -> Vec<BlockPoint> {
    use conic_cert::{BlockKind, SymMat};
    inst.block_kinds()
        .into_iter()
        .map(|k| match k {
            BlockKind::Lorentz(m) => BlockPoint::Lorentz(random_vec(r, m, scale)),
            BlockKind::Psd(m) => BlockPoint::Psd(SymMat::from_full(&random_sym(r, m, scale))),
        })
        .collect()
}
