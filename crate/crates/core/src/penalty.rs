//! External penalty method: outer `ρ`-loop, BFGS inner solves of
//! `F(x) = f(x) + ¼‖x − c‖⁴ + ρΦ(x)`, multiplier estimates
//! `ω = ρΠ(−g)`, `μ = ρh`, AKKT diagnostics and a curvature probe.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::{self, BlockKind, BlockPoint, LorentzRegion, SpectralData, DEFAULT_ZERO_TOL};
use crate::error::{Error, Result};
use crate::model::{Evaluation, Multipliers, ProblemInstance};
use crate::subdiff;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rho0: f64,
    pub rho_mult: f64,
    /// Inner tolerance `ε_k = max(eps0 / ρ_k, inner_tol_floor)`.
    pub eps0: f64,
    pub inner_tol_floor: f64,
    pub outer_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub quartic_center: Option<Vec<f64>>,
    /// `‖(ω, μ)‖` above this ends the run as `akkt_unbounded_multipliers`.
    pub multiplier_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho0: 1.0,
            rho_mult: 10.0,
            eps0: 1e-2,
            inner_tol_floor: 1e-11,
            outer_tol: 1e-8,
            max_outer: 25,
            max_inner: 5000,
            quartic_center: None,
            multiplier_bound: 1e8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = [self.rho0, self.eps0, self.inner_tol_floor, self.outer_tol, self.multiplier_bound];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("solver tolerances and rho0 must be positive".into()));
        }
        if !(self.rho_mult > 1.0 && self.rho_mult.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho_mult must exceed 1, got {}", self.rho_mult)));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidArgument("iteration budgets must be positive".into()));
        }
        if let Some(c) = &self.quartic_center {
            if c.len() != n {
                return Err(Error::dim("quartic center", n, c.len()));
            }
        }
        Ok(())
    }

    fn center(&self) -> Option<DVector<f64>> {
        self.quartic_center.as_ref().map(|c| DVector::from_column_slice(c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    ConvergedKkt,
    AkktUnboundedMultipliers,
    InfeasibleStationary,
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::ConvergedKkt => "converged_kkt",
            SolveStatus::AkktUnboundedMultipliers => "akkt_unbounded_multipliers",
            SolveStatus::InfeasibleStationary => "infeasible_stationary",
            SolveStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStatus {
    Converged,
    /// No progress at the rounding floor of `F`; the best iterate is returned.
    Stalled,
    /// `max_inner` reached; the best iterate is returned.
    InnerIncomplete,
}

#[derive(Clone, Debug)]
pub struct InnerResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: InnerStatus,
}

/// Complementarity evidence for one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockComplementarity {
    pub block: usize,
    /// `|⟨g_i(x), ω_i⟩|`.
    pub inner_product: f64,
    /// `‖ω_i‖` for Lorentz blocks with `g_i(x)` in the interior.
    pub interior_multiplier: Option<f64>,
    /// `‖ω̄/‖ω̄‖ + ḡ/‖ḡ‖‖` for the remaining Lorentz blocks.
    pub angular_defect: Option<f64>,
    /// `Σ |λ_k(g) · (Uᵀ ω U)_kk|` in the eigenframe of `g`.
    pub eigen_product: Option<f64>,
    /// `‖gω − ωg‖_F`.
    pub commutator: Option<f64>,
}

impl BlockComplementarity {
    pub fn defect(&self) -> f64 {
        [
            Some(self.inner_product),
            self.interior_multiplier,
            self.angular_defect,
            self.eigen_product,
            self.commutator,
        ]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AkktDiagnostics {
    /// `‖∇_x L(x, ω, μ)‖`.
    pub stationarity: f64,
    /// `Φ(x)`.
    pub phi: f64,
    /// Largest per-block defect.
    pub complementarity: f64,
    pub blocks: Vec<BlockComplementarity>,
}

impl AkktDiagnostics {
    /// `max(‖∇L‖, Φ^{1/2}, complementarity)`.
    pub fn combined(&self) -> f64 {
        self.stationarity.max(self.phi.sqrt()).max(self.complementarity)
    }
}

/// Below this a vector counts as zero when forming directions.
const DIRECTION_FLOOR: f64 = 1e-300;

fn block_complementarity(index: usize, g: &BlockPoint, w: &BlockPoint) -> Result<BlockComplementarity> {
    let mut out = BlockComplementarity {
        block: index,
        inner_product: g.inner(w).abs(),
        interior_multiplier: None,
        angular_defect: None,
        eigen_product: None,
        commutator: None,
    };
    match (g, w) {
        (BlockPoint::Lorentz(gv), BlockPoint::Lorentz(wv)) => {
            let tol = DEFAULT_ZERO_TOL * gv.norm().max(1.0);
            if cone::classify_lorentz(gv, tol) == LorentzRegion::Interior {
                out.interior_multiplier = Some(wv.norm());
            } else if gv.len() > 1 {
                let gb = gv.rows(1, gv.len() - 1);
                let wb = wv.rows(1, wv.len() - 1);
                if gb.norm() > DIRECTION_FLOOR && wb.norm() > DIRECTION_FLOOR {
                    out.angular_defect = Some((wb / wb.norm() + gb / gb.norm()).norm());
                }
            }
        }
        (BlockPoint::Psd(gm), BlockPoint::Psd(wm)) => {
            let spec = SpectralData::of(gm, None)?;
            let u = &spec.vectors;
            let wt = u.transpose() * wm.to_full() * u;
            let s: f64 = spec.eigenvalues.iter().enumerate().map(|(k, l)| (l * wt[(k, k)]).abs()).sum();
            out.eigen_product = Some(s);
            let (gf, wf) = (gm.to_full(), wm.to_full());
            out.commutator = Some((&gf * &wf - &wf * &gf).norm());
        }
        _ => return Err(Error::dim("multiplier block kind", g.kind().dim(), w.kind().dim())),
    }
    Ok(out)
}

/// AKKT diagnostics of `(x, ω, μ)` from a prepared evaluation.
pub fn akkt_from_eval(ev: &Evaluation, m: &Multipliers) -> Result<AkktDiagnostics> {
    let stationarity = ev.lagrangian_grad(m)?.norm();
    let phi = ev.phi()?;
    let blocks = ev
        .g_values()
        .iter()
        .zip(&m.omega)
        .enumerate()
        .map(|(i, (g, w))| block_complementarity(i, g, w))
        .collect::<Result<Vec<_>>>()?;
    let complementarity = blocks.iter().map(|b| b.defect()).fold(0.0, f64::max);
    Ok(AkktDiagnostics {
        stationarity,
        phi,
        complementarity,
        blocks,
    })
}

pub fn akkt_residual(inst: &ProblemInstance, x: &DVector<f64>, m: &Multipliers) -> Result<AkktDiagnostics> {
    m.check(inst)?;
    akkt_from_eval(&inst.evaluate(x)?, m)
}

/// `ω = ρΠ(−g(x))`, `μ = ρh(x)`.
pub fn penalty_multipliers(ev: &Evaluation, rho: f64) -> Result<Multipliers> {
    Ok(Multipliers {
        omega: ev.minus_projections()?.iter().map(|p| p.scale(rho)).collect(),
        mu: ev.h_values() * rho,
    })
}

fn value_grad_from(ev: &Evaluation, rho: f64, center: Option<&DVector<f64>>) -> Result<(f64, DVector<f64>)> {
    let mut value = ev.f.value + rho * ev.phi()?;
    let mut grad = &ev.f.grad + ev.phi_grad()? * rho;
    if let Some(c) = center {
        let r = &ev.x - c;
        let r2 = r.norm_squared();
        value += 0.25 * r2 * r2;
        grad += r * r2;
    }
    Ok((value, grad))
}

/// `F(x)` and `∇F(x)`.
pub fn penalty_value_grad(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    rho: f64,
    center: Option<&DVector<f64>>,
) -> Result<(f64, DVector<f64>)> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    if let Some(c) = center {
        if c.len() != inst.n() {
            return Err(Error::dim("quartic center", inst.n(), c.len()));
        }
    }
    value_grad_from(&inst.evaluate(x)?, rho, center)
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
/// Iterations without a new smallest `‖∇F‖` before the inner solve gives up.
const STALL_WINDOW: usize = 50;

/// BFGS with backtracking Armijo steps; falls back to steepest descent when
/// the quasi-Newton direction fails to make progress.
pub fn inner_minimize(
    inst: &ProblemInstance,
    rho: f64,
    x_start: &DVector<f64>,
    eps_k: f64,
    config: &SolverConfig,
) -> Result<InnerResult> {
    if !(eps_k > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_k must be positive, got {eps_k}")));
    }
    let center = config.center();
    let eval = |x: &DVector<f64>| penalty_value_grad(inst, x, rho, center.as_ref());
    let n = inst.n();
    let mut x = x_start.clone();
    let (mut fx, mut gx) = eval(&x)?;
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut iterations = 0;
    let done = |x: DVector<f64>, value: f64, g: &DVector<f64>, iterations: usize, status| InnerResult {
        x,
        value,
        grad_norm: g.norm(),
        iterations,
        status,
    };

    let mut best = (x.clone(), fx, gx.clone());
    let mut since_best = 0;
    while iterations < config.max_inner {
        if gx.norm() <= eps_k {
            return Ok(done(x, fx, &gx, iterations, InnerStatus::Converged));
        }
        if gx.norm() < best.2.norm() {
            best = (x.clone(), fx, gx.clone());
            since_best = 0;
        } else if since_best >= STALL_WINDOW {
            // Wandering at the rounding floor of ∇F.
            let (bx, bf, bg) = best;
            return Ok(done(bx, bf, &bg, iterations, InnerStatus::Stalled));
        }
        since_best += 1;
        let mut dir = -(&hinv * &gx);
        let mut slope = gx.dot(&dir);
        if !(slope < 0.0) {
            hinv = DMatrix::identity(n, n);
            fresh = true;
            dir = -gx.clone();
            slope = gx.dot(&dir);
        }
        // First steepest-descent step: keep the trial move at unit length.
        let mut t = if fresh { (1.0 / gx.norm()).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let xt = &x + &dir * t;
            if xt == x {
                // The step is below the resolution of x; smaller ones are too.
                break;
            }
            if let Ok((ft, gt)) = eval(&xt) {
                let armijo = ft <= fx + ARMIJO_C1 * t * slope;
                // Below rounding level of F, accept steps that reduce ‖∇F‖.
                let flat = (ft - fx).abs() <= 1e-14 * (1.0 + fx.abs()) && gt.norm() < gx.norm();
                if ft.is_finite() && (armijo || flat) {
                    accepted = Some((xt, ft, gt, t));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew, t)) = accepted else {
            if fresh {
                return Ok(done(x, fx, &gx, iterations, InnerStatus::Stalled));
            }
            hinv = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        iterations += 1;
        let s = &dir * t;
        let y = &gnew - &gx;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                hinv = DMatrix::identity(n, n) * (sy / y.norm_squared());
            }
            let rho_b = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            // H⁺ = H − ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
            hinv -= (&hy * s.transpose() + &s * hy.transpose()) * rho_b;
            hinv += (&s * s.transpose()) * (rho_b * rho_b * yhy + rho_b);
            fresh = false;
        }
        x = xn;
        fx = fnew;
        gx = gnew;
    }
    if gx.norm() <= eps_k {
        return Ok(done(x, fx, &gx, iterations, InnerStatus::Converged));
    }
    let (x, fx, gx) = if gx.norm() < best.2.norm() { (x, fx, gx) } else { best };
    Ok(done(x, fx, &gx, iterations, InnerStatus::InnerIncomplete))
}

/// One outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub rho: f64,
    pub x: Vec<f64>,
    pub multipliers: Multipliers,
    pub diagnostics: AkktDiagnostics,
    pub phi_grad_norm: f64,
    pub inner_iterations: usize,
    pub inner_status: InnerStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub x: DVector<f64>,
    pub multipliers: Multipliers,
    pub trace: IterateTrace,
    pub status: SolveStatus,
}

/// `Φ_k > STALL_RATIO · Φ_{k−1}` counts as no progress on feasibility.
const STALL_RATIO: f64 = 0.99;
const INFEASIBLE_GRAD_TOL: f64 = 1e-6;

/// Runs the outer penalty loop from `x0`.
pub fn solve(inst: &ProblemInstance, x0: &DVector<f64>, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate(inst.n())?;
    if x0.len() != inst.n() {
        return Err(Error::dim("starting point", inst.n(), x0.len()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("starting point has non-finite entries".into()));
    }
    let mut x = x0.clone();
    let mut rho = config.rho0;
    let mut trace = IterateTrace::default();
    let mut prev_phi: Option<f64> = None;
    for k in 0..config.max_outer {
        let eps = (config.eps0 / rho).max(config.inner_tol_floor);
        let inner = inner_minimize(inst, rho, &x, eps, config)?;
        x = inner.x;
        let ev = inst.evaluate(&x)?;
        let multipliers = penalty_multipliers(&ev, rho)?;
        let diagnostics = akkt_from_eval(&ev, &multipliers)?;
        let phi_grad_norm = ev.phi_grad()?.norm();
        let phi = diagnostics.phi;
        let combined = diagnostics.combined();
        let mult_norm = multipliers.norm();
        trace.rows.push(TraceRow {
            k,
            rho,
            x: x.iter().copied().collect(),
            multipliers: multipliers.clone(),
            diagnostics,
            phi_grad_norm,
            inner_iterations: inner.iterations,
            inner_status: inner.status,
        });
        let finish = |status, trace| SolveOutcome {
            x: x.clone(),
            multipliers: multipliers.clone(),
            trace,
            status,
        };
        let stalled = prev_phi.is_some_and(|p| phi > STALL_RATIO * p);
        if stalled && phi > config.outer_tol && phi_grad_norm <= INFEASIBLE_GRAD_TOL {
            return Ok(finish(SolveStatus::InfeasibleStationary, trace));
        }
        if mult_norm > config.multiplier_bound {
            return Ok(finish(SolveStatus::AkktUnboundedMultipliers, trace));
        }
        if combined <= config.outer_tol {
            return Ok(finish(SolveStatus::ConvergedKkt, trace));
        }
        prev_phi = Some(phi);
        rho *= config.rho_mult;
    }
    // Past the rounding floor of ρ·ε_mach the iterates degrade; report the
    // row with the smallest combined residual instead of the last one.
    let best = trace
        .rows
        .iter()
        .min_by(|a, b| a.diagnostics.combined().total_cmp(&b.diagnostics.combined()))
        .expect("max_outer ≥ 1")
        .clone();
    Ok(SolveOutcome {
        x: DVector::from_vec(best.x),
        multipliers: best.multipliers,
        trace,
        status: SolveStatus::BudgetExhausted,
    })
}

/// `dᵀ[∇²_x L(x, ρΠ(−g), ρh) + ρ Σ Dg_iᵀ V_i Dg_i + ρ DhᵀDh] d` with `V_i`
/// chosen in the generalized Jacobian of `Π_{K_i}` at `−g_i(x)` by `theta`.
pub fn curvature_probe(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    rho: f64,
    d: &DVector<f64>,
    theta: f64,
) -> Result<f64> {
    subdiff::check_theta(theta)?;
    if d.len() != inst.n() {
        return Err(Error::dim("probe direction", inst.n(), d.len()));
    }
    let ev = inst.evaluate(x)?;
    let m = penalty_multipliers(&ev, rho)?;
    let mut q = d.dot(&(ev.lagrangian_hess(&m)? * d));
    for b in &ev.g {
        let u = b.apply(d);
        let g = b.value();
        let vu = match (b.kind, &g, &u) {
            (BlockKind::Lorentz(_), BlockPoint::Lorentz(gv), BlockPoint::Lorentz(uv)) => {
                let z = -gv;
                let tol = DEFAULT_ZERO_TOL * z.norm().max(1.0);
                let v = subdiff::lorentz_proj_subdiff(&z, tol).select(theta)?;
                uv.dot(&(v * uv))
            }
            (BlockKind::Psd(_), BlockPoint::Psd(gm), BlockPoint::Psd(um)) => {
                um.inner(&subdiff::psd_proj_subdiff_apply(gm, um, theta, None)?)
            }
            _ => unreachable!("block evaluation matches its kind"),
        };
        q += rho * vu;
    }
    q += rho * (ev.dh() * d).norm_squared();
    Ok(q)
}
