//! First- and second-order certificates at a candidate point: KKT
//! residuals, index partitions, critical subspaces, sigma-terms, WSOC, and
//! the constraint qualifications (nondegeneracy, WCR, strict
//! complementarity, Robinson).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{self, BlockKind, BlockPoint, LorentzRegion, SpectralData, SymMat};
use crate::error::{Error, Result};
use crate::linalg::{self, dmatrix_serde};
use crate::model::{BlockEval, Evaluation, Multipliers, ProblemInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative zero tolerance for index partitions (scaled by `max(1, ‖·‖)`).
    pub partition_tol: f64,
    /// Numerical rank cut `σ ≥ rank_tol · σ_max`.
    pub rank_tol: f64,
    /// `√Φ(x)` above this makes the point infeasible.
    pub feasibility_tol: f64,
    pub kkt_tol: f64,
    pub wsoc_tol: f64,
    pub robinson_tol: f64,
    pub wcr_radius: f64,
    pub wcr_samples: usize,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            partition_tol: 1e-6,
            rank_tol: 1e-8,
            feasibility_tol: 1e-6,
            kkt_tol: 1e-6,
            wsoc_tol: 1e-6,
            robinson_tol: 1e-6,
            wcr_radius: 1e-4,
            wcr_samples: 32,
            seed: 42,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LorentzTag {
    /// `g_i(x) = 0`.
    I0,
    /// `g_i(x) ∈ bd⁺(K_i)`.
    IB,
    /// `g_i(x) ∈ int(K_i)`.
    II,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BlockPartition {
    Lorentz {
        tag: LorentzTag,
        /// Membership in `I_BB`, known once `ω` is given.
        in_i_bb: Option<bool>,
    },
    Psd {
        eigenvalues: Vec<f64>,
        /// Positive eigenvalues of `g(x)`.
        alpha: Vec<usize>,
        /// Zero eigenvalues of `g(x)`.
        beta: Vec<usize>,
        #[serde(with = "dmatrix_serde")]
        vectors: DMatrix<f64>,
        /// Eigenvalues of `U_βᵀ ω U_β` above tolerance (the part of the
        /// kernel where `ω` is positive) and the remaining common kernel.
        omega_positive_in_kernel: Option<usize>,
        common_kernel: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexPartition {
    pub blocks: Vec<BlockPartition>,
    pub tol: f64,
}

impl IndexPartition {
    fn beta_basis(&self, block: usize) -> Option<DMatrix<f64>> {
        match &self.blocks[block] {
            BlockPartition::Psd { beta, vectors, .. } => {
                let mut out = DMatrix::zeros(vectors.nrows(), beta.len());
                for (c, &i) in beta.iter().enumerate() {
                    out.set_column(c, &vectors.column(i));
                }
                Some(out)
            }
            BlockPartition::Lorentz { .. } => None,
        }
    }

    pub fn lorentz_tags(&self) -> Vec<Option<LorentzTag>> {
        self.blocks
            .iter()
            .map(|b| match b {
                BlockPartition::Lorentz { tag, .. } => Some(*tag),
                BlockPartition::Psd { .. } => None,
            })
            .collect()
    }
}

fn scaled_tol(tol: f64, norm: f64) -> f64 {
    tol * norm.max(1.0)
}

fn feasibility_guard(ev: &Evaluation, tol: &Tolerances) -> Result<()> {
    let phi = ev.phi()?;
    if phi.sqrt() > 10.0 * tol.feasibility_tol {
        return Err(Error::Infeasible {
            phi,
            tol: tol.feasibility_tol,
        });
    }
    Ok(())
}

fn partition_from(ev: &Evaluation, omega: Option<&[BlockPoint]>, tol: f64) -> Result<IndexPartition> {
    let mut blocks = Vec::new();
    for (i, b) in ev.g.iter().enumerate() {
        let g = b.value();
        let w = omega.map(|o| &o[i]);
        let part = match &g {
            BlockPoint::Lorentz(gv) => {
                let region = cone::classify_lorentz(gv, scaled_tol(tol, gv.norm()));
                let tag = match region {
                    LorentzRegion::Origin | LorentzRegion::NegInterior | LorentzRegion::NegBoundaryPlus => {
                        LorentzTag::I0
                    }
                    LorentzRegion::Interior => LorentzTag::II,
                    LorentzRegion::BoundaryPlus | LorentzRegion::Outside => LorentzTag::IB,
                };
                let in_i_bb = match w {
                    Some(BlockPoint::Lorentz(wv)) => Some(
                        tag == LorentzTag::IB
                            && cone::classify_lorentz(wv, scaled_tol(tol, wv.norm())) == LorentzRegion::BoundaryPlus,
                    ),
                    _ => None,
                };
                BlockPartition::Lorentz { tag, in_i_bb }
            }
            BlockPoint::Psd(gm) => {
                let raw = SpectralData::of(gm, Some(0.0))?;
                let scale = raw.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
                let spec = SpectralData::of(gm, Some(scaled_tol(tol, scale)))?;
                let alpha = spec.alpha.clone();
                // Eigenvalues below −tol only survive for points that are
                // barely infeasible; they belong with the kernel.
                let mut beta = spec.beta.clone();
                beta.extend(&spec.gamma);
                let (mut pos, mut common) = (None, None);
                if let Some(BlockPoint::Psd(wm)) = w {
                    let ub = spec.columns(&beta);
                    let wbb = ub.transpose() * wm.to_full() * &ub;
                    let (vals, _) = linalg::sym_eigen_desc(&linalg::symmetrize(&wbb))?;
                    let wtol = scaled_tol(tol, wm.norm());
                    let k = vals.iter().filter(|&&l| l > wtol).count();
                    pos = Some(k);
                    common = Some(beta.len() - k);
                }
                BlockPartition::Psd {
                    eigenvalues: spec.eigenvalues.clone(),
                    alpha,
                    beta,
                    vectors: spec.vectors.clone(),
                    omega_positive_in_kernel: pos,
                    common_kernel: common,
                }
            }
        };
        blocks.push(part);
    }
    Ok(IndexPartition { blocks, tol })
}

pub fn index_partition(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    omega: Option<&[BlockPoint]>,
    tol: &Tolerances,
) -> Result<IndexPartition> {
    let ev = inst.evaluate(x)?;
    feasibility_guard(&ev, tol)?;
    if let Some(o) = omega {
        Multipliers {
            omega: o.to_vec(),
            mu: DVector::zeros(inst.p()),
        }
        .check(inst)?;
    }
    partition_from(&ev, omega, tol.partition_tol)
}

fn gamma_apply(v: &DVector<f64>) -> DVector<f64> {
    let mut out = -v;
    out[0] = v[0];
    out
}

/// `(‖ḡ‖, ḡ)`.
fn g_tilde(g: &DVector<f64>) -> DVector<f64> {
    let mut out = g.clone();
    if g.len() > 1 {
        out[0] = g.rows(1, g.len() - 1).norm();
    }
    out
}

/// `[u_iᵀ ∂_ℓ g u_j]_ℓ` for `i ≤ j` over the columns of `ub`.
fn psd_kernel_rows(b: &BlockEval, ub: &DMatrix<f64>, n: usize) -> Vec<DVector<f64>> {
    let k = ub.ncols();
    let conj: Vec<DMatrix<f64>> = (0..n)
        .map(|l| ub.transpose() * b.partial(l).packed_to_full() * ub)
        .collect();
    let mut rows = Vec::new();
    for i in 0..k {
        for j in i..k {
            rows.push(DVector::from_iterator(n, conj.iter().map(|c| c[(i, j)])));
        }
    }
    rows
}

trait PackedFull {
    fn packed_to_full(&self) -> DMatrix<f64>;
}

impl PackedFull for BlockPoint {
    fn packed_to_full(&self) -> DMatrix<f64> {
        match self {
            BlockPoint::Psd(m) => m.to_full(),
            BlockPoint::Lorentz(v) => DMatrix::from_column_slice(v.len(), 1, v.as_slice()),
        }
    }
}

/// Which vector family to build from the frozen index sets.
#[derive(Clone, Copy, PartialEq)]
enum Family {
    /// `gᵀΓDg` rows for `I_B` (critical subspace).
    Subspace,
    /// `Dgᵀ Γ g̃` vectors for `I_B` (nondegeneracy and WCR).
    Transversal,
}

/// Stacks the family vectors at `ev`; `kernels[i]` overrides the PSD kernel
/// basis of block `i` (used at perturbed points).
fn family_vectors(
    ev: &Evaluation,
    part: &IndexPartition,
    kernels: &[Option<DMatrix<f64>>],
    which: Family,
) -> Vec<DVector<f64>> {
    let n = ev.n();
    let mut out: Vec<DVector<f64>> = ev.h.iter().map(|j| j.grad.clone()).collect();
    for (i, (b, p)) in ev.g.iter().zip(&part.blocks).enumerate() {
        match p {
            BlockPartition::Lorentz { tag, .. } => match tag {
                LorentzTag::I0 => out.extend(b.entries.iter().map(|j| j.grad.clone())),
                LorentzTag::IB => {
                    let BlockPoint::Lorentz(g) = b.value() else { unreachable!() };
                    let w = match which {
                        Family::Subspace => gamma_apply(&g),
                        Family::Transversal => gamma_apply(&g_tilde(&g)),
                    };
                    out.push(b.jacobian().transpose() * w);
                }
                LorentzTag::II => {}
            },
            BlockPartition::Psd { .. } => {
                let ub = kernels
                    .get(i)
                    .cloned()
                    .flatten()
                    .or_else(|| part.beta_basis(i))
                    .expect("psd block has a kernel basis");
                out.extend(psd_kernel_rows(b, &ub, n));
            }
        }
    }
    out
}

fn stack_rows(rows: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), n);
    for (r, v) in rows.iter().enumerate() {
        m.set_row(r, &v.transpose());
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSubspaceBasis {
    /// `n × q`, orthonormal columns.
    #[serde(with = "dmatrix_serde")]
    pub basis: DMatrix<f64>,
    /// Rows whose common null space is the subspace.
    #[serde(with = "dmatrix_serde")]
    pub constraint_rows: DMatrix<f64>,
    pub rank: usize,
    pub rank_tol: f64,
}

impl CriticalSubspaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Largest `|row · column|` relative to the largest singular value.
    pub fn annihilation_defect(&self) -> f64 {
        if self.constraint_rows.nrows() == 0 || self.basis.ncols() == 0 {
            return 0.0;
        }
        let smax = linalg::singular_values(&self.constraint_rows).first().copied().unwrap_or(0.0);
        linalg::max_abs(&(&self.constraint_rows * &self.basis)) / smax.max(f64::MIN_POSITIVE)
    }
}

fn subspace_from(ev: &Evaluation, part: &IndexPartition, rank_tol: f64) -> CriticalSubspaceBasis {
    let rows = stack_rows(&family_vectors(ev, part, &[], Family::Subspace), ev.n());
    let (basis, rank, _) = linalg::null_space(&rows, rank_tol);
    CriticalSubspaceBasis {
        basis,
        constraint_rows: rows,
        rank,
        rank_tol,
    }
}

pub fn critical_subspace_basis(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    tol: &Tolerances,
) -> Result<CriticalSubspaceBasis> {
    let ev = inst.evaluate(x)?;
    feasibility_guard(&ev, tol)?;
    let part = partition_from(&ev, None, tol.partition_tol)?;
    Ok(subspace_from(&ev, &part, tol.rank_tol))
}

fn sigma_socp_from(ev: &Evaluation, part: &IndexPartition, omega: &[BlockPoint]) -> Result<DMatrix<f64>> {
    let n = ev.n();
    let mut sigma = DMatrix::zeros(n, n);
    for (i, (b, p)) in ev.g.iter().zip(&part.blocks).enumerate() {
        if let BlockPartition::Lorentz { in_i_bb: Some(true), .. } = p {
            let (BlockPoint::Lorentz(g), BlockPoint::Lorentz(w)) = (b.value(), &omega[i]) else {
                unreachable!()
            };
            if g[0] <= scaled_tol(part.tol, g.norm()) {
                return Err(Error::SigmaGuard { block: i, value: g[0] });
            }
            let jac = b.jacobian();
            let mut gj = jac.clone();
            for r in 1..gj.nrows() {
                gj.row_mut(r).neg_mut();
            }
            sigma -= (jac.transpose() * gj) * (w[0] / g[0]);
        }
    }
    Ok(sigma)
}

fn sigma_sdp_from(ev: &Evaluation, omega: &[BlockPoint], pinv_tol: f64) -> Result<DMatrix<f64>> {
    let n = ev.n();
    let mut sigma = DMatrix::zeros(n, n);
    for (b, w) in ev.g.iter().zip(omega) {
        let (BlockPoint::Psd(g), BlockPoint::Psd(w)) = (b.value(), w) else {
            continue;
        };
        let gp = cone::pseudoinverse_psd(&g, pinv_tol)?.to_full();
        let wf = w.to_full();
        let parts: Vec<DMatrix<f64>> = (0..n).map(|l| b.partial(l).packed_to_full()).collect();
        let left: Vec<DMatrix<f64>> = parts.iter().map(|p| &wf * p * &gp).collect();
        for i in 0..n {
            for j in 0..=i {
                // 2⟨ω, ∂_i g g† ∂_j g⟩ = 2 tr(ω ∂_i g g† ∂_j g)
                let v = 2.0 * left[i].component_mul(&parts[j].transpose()).sum();
                let v_sym = 2.0 * left[j].component_mul(&parts[i].transpose()).sum();
                let s = 0.5 * (v + v_sym);
                sigma[(i, j)] += s;
                if i != j {
                    sigma[(j, i)] += s;
                }
            }
        }
    }
    Ok(sigma)
}

fn check_omega(inst: &ProblemInstance, omega: &[BlockPoint]) -> Result<()> {
    Multipliers {
        omega: omega.to_vec(),
        mu: DVector::zeros(inst.p()),
    }
    .check(inst)
}

/// Sum of `−([ω_i]₀/[g_i]₀)·Dg_iᵀΓ_iDg_i` over `I_BB`.
pub fn sigma_term_socp(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    omega: &[BlockPoint],
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    check_omega(inst, omega)?;
    let ev = inst.evaluate(x)?;
    let part = partition_from(&ev, Some(omega), tol.partition_tol)?;
    sigma_socp_from(&ev, &part, omega)
}

/// `σ_ij = 2⟨ω, ∂_i g · g† · ∂_j g⟩` summed over PSD blocks.
pub fn sigma_term_sdp(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    omega: &[BlockPoint],
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    check_omega(inst, omega)?;
    sigma_sdp_from(&inst.evaluate(x)?, omega, tol.partition_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// `‖∇_x L‖`.
    pub stationarity: f64,
    /// `‖h(x)‖`.
    pub equality: f64,
    /// `‖Π_K(−g(x))‖ = dist(g(x), K)`.
    pub g_cone_distance: f64,
    /// `‖Π_K(−ω)‖ = dist(ω, K)`.
    pub omega_cone_distance: f64,
    /// `Σ |⟨g_i(x), ω_i⟩|`.
    pub complementarity: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        [
            self.stationarity,
            self.equality,
            self.g_cone_distance,
            self.omega_cone_distance,
            self.complementarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn kkt_from(ev: &Evaluation, m: &Multipliers) -> Result<KktResidual> {
    let g = ev.g_values();
    let omega_minus: Vec<BlockPoint> = m.omega.iter().map(|w| cone::project_block(&w.neg())).collect::<Result<_>>()?;
    Ok(KktResidual {
        stationarity: ev.lagrangian_grad(m)?.norm(),
        equality: ev.h_values().norm(),
        g_cone_distance: cone::blocks_norm(&ev.minus_projections()?),
        omega_cone_distance: cone::blocks_norm(&omega_minus),
        complementarity: g.iter().zip(&m.omega).map(|(a, b)| a.inner(b).abs()).sum(),
    })
}

pub fn kkt_residual(inst: &ProblemInstance, x: &DVector<f64>, m: &Multipliers) -> Result<KktResidual> {
    m.check(inst)?;
    kkt_from(&inst.evaluate(x)?, m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsocReport {
    pub holds: bool,
    /// Smallest eigenvalue of `Bᵀ(∇²L + σ)B`; `None` when the subspace is `{0}`.
    pub min_rayleigh: Option<f64>,
    pub subspace_dim: usize,
    /// The triple is not approximately KKT (residual above `1e-4`).
    pub kkt_warning: bool,
}

const WSOC_KKT_WARN: f64 = 1e-4;

fn wsoc_from(
    ev: &Evaluation,
    m: &Multipliers,
    basis: &CriticalSubspaceBasis,
    sigma: &DMatrix<f64>,
    tol: f64,
) -> Result<WsocReport> {
    let kkt_warning = kkt_from(ev, m)?.max() > WSOC_KKT_WARN;
    let q = basis.dim();
    if q == 0 {
        return Ok(WsocReport {
            holds: true,
            min_rayleigh: None,
            subspace_dim: 0,
            kkt_warning,
        });
    }
    let hess = ev.lagrangian_hess(m)? + sigma;
    let reduced = linalg::symmetrize(&(basis.basis.transpose() * hess * &basis.basis));
    let lmin = linalg::min_eigenvalue(&reduced)?;
    Ok(WsocReport {
        holds: lmin >= -tol,
        min_rayleigh: Some(lmin),
        subspace_dim: q,
        kkt_warning,
    })
}

/// Full sigma-term (Lorentz and PSD contributions).
fn sigma_from(ev: &Evaluation, part: &IndexPartition, omega: &[BlockPoint], tol: f64) -> Result<DMatrix<f64>> {
    Ok(sigma_socp_from(ev, part, omega)? + sigma_sdp_from(ev, omega, tol)?)
}

pub fn wsoc_check(inst: &ProblemInstance, x: &DVector<f64>, m: &Multipliers, tol: &Tolerances) -> Result<WsocReport> {
    m.check(inst)?;
    let ev = inst.evaluate(x)?;
    let part = partition_from(&ev, Some(&m.omega), tol.partition_tol)?;
    let basis = subspace_from(&ev, &part, tol.rank_tol);
    let sigma = sigma_from(&ev, &part, &m.omega, tol.partition_tol)?;
    wsoc_from(&ev, m, &basis, &sigma, tol.wsoc_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStrictComplementarity {
    pub block: usize,
    pub holds: bool,
    /// Lorentz: region of `ω_i` required and found.
    pub omega_region: Option<LorentzRegion>,
    /// PSD: `rank g + rank ω − m` (zero when strict).
    pub rank_gap: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrictComplementarityReport {
    pub holds: bool,
    pub blocks: Vec<BlockStrictComplementarity>,
}

fn strict_comp_from(ev: &Evaluation, part: &IndexPartition, omega: &[BlockPoint]) -> Result<StrictComplementarityReport> {
    let tol = part.tol;
    let mut blocks = Vec::new();
    for (i, (p, w)) in part.blocks.iter().zip(omega).enumerate() {
        let entry = match (p, w) {
            (BlockPartition::Lorentz { tag, .. }, BlockPoint::Lorentz(wv)) => {
                let region = cone::classify_lorentz(wv, scaled_tol(tol, wv.norm()));
                let holds = match tag {
                    LorentzTag::I0 => region == LorentzRegion::Interior,
                    LorentzTag::IB => region == LorentzRegion::BoundaryPlus,
                    LorentzTag::II => true,
                };
                BlockStrictComplementarity {
                    block: i,
                    holds,
                    omega_region: Some(region),
                    rank_gap: None,
                }
            }
            (BlockPartition::Psd { alpha, eigenvalues, .. }, BlockPoint::Psd(wm)) => {
                let spec = SpectralData::of(wm, Some(0.0))?;
                let wtol = scaled_tol(tol, wm.norm());
                let rank_w = spec.eigenvalues.iter().filter(|&&l| l > wtol).count();
                let gap = (alpha.len() + rank_w) as i64 - eigenvalues.len() as i64;
                BlockStrictComplementarity {
                    block: i,
                    holds: gap == 0,
                    omega_region: None,
                    rank_gap: Some(gap),
                }
            }
            _ => unreachable!("multipliers checked against the instance"),
        };
        blocks.push(entry);
    }
    let _ = ev;
    Ok(StrictComplementarityReport {
        holds: blocks.iter().all(|b| b.holds),
        blocks,
    })
}

pub fn strict_complementarity_check(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    omega: &[BlockPoint],
    tol: &Tolerances,
) -> Result<StrictComplementarityReport> {
    check_omega(inst, omega)?;
    let ev = inst.evaluate(x)?;
    let part = partition_from(&ev, Some(omega), tol.partition_tol)?;
    strict_comp_from(&ev, &part, omega)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub holds: bool,
    pub family_size: usize,
    /// `None` for an empty family.
    pub smallest_singular_value: Option<f64>,
    pub largest_singular_value: Option<f64>,
}

/// Linear independence of the transversality family. Besides the relative
/// rank test, the smallest singular value must exceed `abs_floor`: a family
/// that is independent only at scale `s` supports a Robinson margin of
/// order `s`, so both checks share the Robinson tolerance.
fn nondegeneracy_from(ev: &Evaluation, part: &IndexPartition, rank_tol: f64, abs_floor: f64) -> NondegeneracyReport {
    let n = ev.n();
    let fam = family_vectors(ev, part, &[], Family::Transversal);
    let count = fam.len();
    if count == 0 {
        return NondegeneracyReport {
            holds: true,
            family_size: 0,
            smallest_singular_value: None,
            largest_singular_value: None,
        };
    }
    let sv = linalg::singular_values(&stack_rows(&fam, n));
    let smax = sv[0];
    let smin = if count > n { 0.0 } else { *sv.last().unwrap() };
    NondegeneracyReport {
        holds: count <= n && smax > linalg::RANK_ABS_FLOOR && smin > rank_tol * smax && smin > abs_floor,
        family_size: count,
        smallest_singular_value: Some(smin),
        largest_singular_value: Some(smax),
    }
}

pub fn nondegeneracy_check(inst: &ProblemInstance, x: &DVector<f64>, tol: &Tolerances) -> Result<NondegeneracyReport> {
    let ev = inst.evaluate(x)?;
    feasibility_guard(&ev, tol)?;
    let part = partition_from(&ev, None, tol.partition_tol)?;
    Ok(nondegeneracy_from(&ev, &part, tol.rank_tol, tol.robinson_tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    /// Supported by finitely many samples only.
    HoldsSampled,
    Fails,
    Indeterminate,
}

impl Verdict {
    pub fn holds(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::HoldsSampled)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCount {
    pub rank: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WcrReport {
    pub verdict: Verdict,
    pub rank_at_point: usize,
    /// Ranks over the sampled points, ascending by rank.
    pub histogram: Vec<RankCount>,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub note: Option<String>,
}

/// Eigenvalue gap below which the kernel split is ill-defined.
const EIGENGAP_GUARD: f64 = 1e-12;

fn perturbed_kernels(ev: &Evaluation, part: &IndexPartition) -> Result<std::result::Result<Vec<Option<DMatrix<f64>>>, String>> {
    let mut out = Vec::new();
    for (i, (b, p)) in ev.g.iter().zip(&part.blocks).enumerate() {
        let BlockPartition::Psd { beta, .. } = p else {
            out.push(None);
            continue;
        };
        let BlockPoint::Psd(g) = b.value() else { unreachable!() };
        let (vals, vecs) = linalg::sym_eigen_desc(&g.to_full())?;
        let m = vals.len();
        let k = beta.len();
        if k > 0 && k < m && vals[m - k - 1] - vals[m - k] < EIGENGAP_GUARD {
            return Ok(Err(format!("eigengap below {EIGENGAP_GUARD:e} in block {i}")));
        }
        let q = vecs.columns(m - k, k).into_owned();
        let target = part.beta_basis(i).expect("psd partition");
        out.push(Some(linalg::procrustes_align(&q, &target)));
    }
    Ok(Ok(out))
}

fn wcr_from(
    inst: &ProblemInstance,
    ev: &Evaluation,
    part: &IndexPartition,
    radius: f64,
    samples: usize,
    rank_tol: f64,
    seed: u64,
) -> Result<WcrReport> {
    let n = ev.n();
    let rank_of = |rows: &[DVector<f64>]| {
        if rows.is_empty() {
            0
        } else {
            linalg::numerical_rank(&linalg::singular_values(&stack_rows(rows, n)), rank_tol)
        }
    };
    let rank_at_point = rank_of(&family_vectors(ev, part, &[], Family::Transversal));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = Vec::with_capacity(samples);
    let mut note = None;
    for _ in 0..samples {
        let u = loop {
            let u = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
            if u.norm() <= 1.0 {
                break u;
            }
        };
        let xs = &ev.x + u * radius;
        let evs = inst.evaluate(&xs)?;
        match perturbed_kernels(&evs, part)? {
            Ok(kernels) => ranks.push(rank_of(&family_vectors(&evs, part, &kernels, Family::Transversal))),
            Err(msg) => {
                note = Some(msg);
                break;
            }
        }
    }
    let mut histogram: Vec<RankCount> = Vec::new();
    for &r in &ranks {
        match histogram.iter_mut().find(|h| h.rank == r) {
            Some(h) => h.count += 1,
            None => histogram.push(RankCount { rank: r, count: 1 }),
        }
    }
    histogram.sort_by_key(|h| h.rank);
    let verdict = if ranks.iter().any(|&r| r != rank_at_point) {
        Verdict::Fails
    } else if note.is_some() {
        Verdict::Indeterminate
    } else {
        Verdict::HoldsSampled
    };
    Ok(WcrReport {
        verdict,
        rank_at_point,
        histogram,
        radius,
        samples,
        seed,
        note,
    })
}

pub fn wcr_check(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    radius: f64,
    samples: usize,
    tol: &Tolerances,
    seed: u64,
) -> Result<WcrReport> {
    if samples < 8 {
        return Err(Error::InvalidArgument(format!("wcr_check needs at least 8 samples, got {samples}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("wcr radius must be positive, got {radius}")));
    }
    let ev = inst.evaluate(x)?;
    feasibility_guard(&ev, tol)?;
    let part = partition_from(&ev, None, tol.partition_tol)?;
    wcr_from(inst, &ev, &part, radius, samples, tol.rank_tol, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobinsonReport {
    pub verdict: Verdict,
    pub dh_full_row_rank: bool,
    /// Best `t` found with `g + Dg[d] − t·e ∈ K`, `Dh d = 0`, `‖d‖ ≤ 1`.
    pub margin: Option<f64>,
    /// A direction achieving `margin`.
    pub direction: Option<Vec<f64>>,
}

/// Packed coordinates in which the Euclidean norm is the block norm.
fn scaled_packed(p: &BlockPoint) -> Vec<f64> {
    match p {
        BlockPoint::Lorentz(v) => v.iter().copied().collect(),
        BlockPoint::Psd(m) => {
            let mut out = Vec::with_capacity(m.packed().len());
            for r in 0..m.order() {
                for c in 0..=r {
                    let s = if r == c { 1.0 } else { std::f64::consts::SQRT_2 };
                    out.push(m.get(r, c) * s);
                }
            }
            out
        }
    }
}

fn from_scaled(kind: BlockKind, v: &[f64]) -> BlockPoint {
    match kind {
        BlockKind::Lorentz(_) => BlockPoint::lorentz(v),
        BlockKind::Psd(m) => {
            let mut s = SymMat::zeros(m);
            let mut k = 0;
            for r in 0..m {
                for c in 0..=r {
                    let f = if r == c { 1.0 } else { std::f64::consts::SQRT_2 };
                    s.set(r, c, v[k] / f);
                    k += 1;
                }
            }
            BlockPoint::Psd(s)
        }
    }
}

/// Smallest cone margin over blocks of the stacked scaled vector `y`.
fn min_margin(kinds: &[BlockKind], y: &DVector<f64>) -> Result<f64> {
    let mut off = 0;
    let mut out = f64::INFINITY;
    for &k in kinds {
        let p = from_scaled(k, &y.as_slice()[off..off + k.dim()]);
        out = out.min(cone::cone_margin(&p)?);
        off += k.dim();
    }
    Ok(out)
}

fn project_cone_scaled(kinds: &[BlockKind], y: &DVector<f64>) -> Result<DVector<f64>> {
    let mut out = Vec::with_capacity(y.len());
    let mut off = 0;
    for &k in kinds {
        let p = cone::project_block(&from_scaled(k, &y.as_slice()[off..off + k.dim()]))?;
        out.extend(scaled_packed(&p));
        off += k.dim();
    }
    Ok(DVector::from_vec(out))
}

/// Alternating projections between `{(z, y) : y = A z + b}` and
/// `{‖z‖ ≤ 1} × K`. Returns the best ball point found and the final gap.
struct MarginProblem<'a> {
    kinds: &'a [BlockKind],
    a: DMatrix<f64>,
    /// `(I + AᵀA)⁻¹`.
    solve: DMatrix<f64>,
    g: DVector<f64>,
    e: DVector<f64>,
}

const AP_MAX_ITER: usize = 4000;

impl MarginProblem<'_> {
    fn margin_at(&self, z: &DVector<f64>) -> Result<f64> {
        min_margin(self.kinds, &(&self.a * z + &self.g))
    }

    /// Searches for `z` with `margin(A z + g) ≥ t`; returns the best `z`
    /// and the final alternating-projection gap.
    fn feasible(&self, t: f64, z0: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let b = &self.g - &self.e * t;
        let mut z = z0.clone();
        let mut y = &self.a * &z + &b;
        let mut best = z.clone();
        let mut gap = f64::INFINITY;
        for _ in 0..AP_MAX_ITER {
            // Project onto ball × K.
            let zb = if z.norm() > 1.0 { &z / z.norm() } else { z.clone() };
            let yk = project_cone_scaled(self.kinds, &y)?;
            // Project back onto the affine set.
            let zn = &self.solve * (&zb + self.a.transpose() * (&yk - &b));
            let yn = &self.a * &zn + &b;
            let new_gap = ((&zn - &zb).norm_squared() + (&yn - &yk).norm_squared()).sqrt();
            best = zb;
            if self.margin_at(&best)? >= t {
                return Ok((best, 0.0));
            }
            let stalled = gap.is_finite() && (gap - new_gap).abs() <= 1e-13 * gap;
            gap = new_gap;
            z = zn;
            y = yn;
            if gap <= 1e-14 || stalled {
                break;
            }
        }
        Ok((best, gap))
    }
}

const ROBINSON_BISECTIONS: usize = 50;
/// A positive alternating-projection gap above this is a definite refutation.
const AP_GAP_DEFINITE: f64 = 1e-9;

fn robinson_from(ev: &Evaluation, tol: &Tolerances) -> Result<RobinsonReport> {
    let n = ev.n();
    let dh = ev.dh();
    let (null, rank, _) = linalg::null_space(&dh, tol.rank_tol);
    let full_rank = rank == dh.nrows();
    if !full_rank {
        return Ok(RobinsonReport {
            verdict: Verdict::Fails,
            dh_full_row_rank: false,
            margin: None,
            direction: None,
        });
    }
    let kinds: Vec<BlockKind> = ev.g.iter().map(|b| b.kind).collect();
    if kinds.is_empty() {
        return Ok(RobinsonReport {
            verdict: Verdict::Holds,
            dh_full_row_rank: true,
            margin: None,
            direction: Some(vec![0.0; n]),
        });
    }
    let g: Vec<f64> = ev.g.iter().flat_map(|b| scaled_packed(&b.value())).collect();
    let e: Vec<f64> = kinds.iter().flat_map(|k| scaled_packed(&k.unit())).collect();
    // Columns: scaled Dg applied to the null-space basis.
    let q = null.ncols();
    let mut a = DMatrix::zeros(g.len(), q);
    for c in 0..q {
        let d = null.column(c).into_owned();
        let col: Vec<f64> = ev.g.iter().flat_map(|b| scaled_packed(&b.apply(&d))).collect();
        a.set_column(c, &DVector::from_vec(col));
    }
    let normal = DMatrix::identity(q, q) + a.transpose() * &a;
    let solve = normal.try_inverse().ok_or_else(|| Error::Report("singular projection system".into()))?;
    let prob = MarginProblem {
        kinds: &kinds,
        a,
        solve,
        g: DVector::from_vec(g),
        e: DVector::from_vec(e),
    };
    let zero = DVector::zeros(q);
    let t0 = prob.margin_at(&zero)?;
    let report = |verdict, margin: f64, z: &DVector<f64>| RobinsonReport {
        verdict,
        dh_full_row_rank: true,
        margin: Some(margin),
        direction: Some((&null * z).iter().copied().collect()),
    };
    if t0 > tol.robinson_tol {
        return Ok(report(Verdict::Holds, t0, &zero));
    }
    // The margin is √2-Lipschitz in the block entries.
    // `lo` is certified by an explicit direction; `a` is the bisection
    // bracket, which also advances on approximate feasibility.
    let mut lo = t0;
    let mut a = t0;
    let mut best = zero.clone();
    let mut hi = t0 + std::f64::consts::SQRT_2 * linalg::singular_values(&prob.a).first().copied().unwrap_or(0.0);
    for _ in 0..ROBINSON_BISECTIONS {
        if hi - a <= 1e-12 {
            break;
        }
        let mid = 0.5 * (a + hi);
        let (z, gap) = prob.feasible(mid, &best)?;
        let got = prob.margin_at(&z)?;
        if got > lo {
            lo = got;
            best = z;
        }
        if gap <= AP_GAP_DEFINITE {
            a = mid;
        } else {
            hi = mid;
        }
        if lo > tol.robinson_tol {
            return Ok(report(Verdict::Holds, lo, &best));
        }
    }
    let (_, gap) = prob.feasible(tol.robinson_tol, &best)?;
    let verdict = if gap >= AP_GAP_DEFINITE {
        Verdict::Fails
    } else {
        Verdict::Indeterminate
    };
    Ok(report(verdict, lo, &best))
}

pub fn robinson_check(inst: &ProblemInstance, x: &DVector<f64>, tol: &Tolerances) -> Result<RobinsonReport> {
    let ev = inst.evaluate(x)?;
    feasibility_guard(&ev, tol)?;
    robinson_from(&ev, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierSource {
    Solver,
    User,
    /// Estimated by a penalty step at the given point.
    Estimated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub phi: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateReport {
    pub x: Vec<f64>,
    pub multipliers: Multipliers,
    pub multiplier_source: MultiplierSource,
    pub feasibility: Feasibility,
    pub kkt: KktResidual,
    pub kkt_holds: bool,
    pub partition: Option<IndexPartition>,
    pub strict_complementarity: Option<StrictComplementarityReport>,
    pub nondegeneracy: Option<NondegeneracyReport>,
    pub wcr: Option<WcrReport>,
    pub robinson: Option<RobinsonReport>,
    #[serde(with = "opt_matrix")]
    pub sigma: Option<DMatrix<f64>>,
    pub critical_subspace: Option<CriticalSubspaceBasis>,
    pub wsoc: Option<WsocReport>,
    pub tolerances: Tolerances,
    pub notes: Vec<String>,
}

mod opt_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::linalg::dmatrix_serde")] DMatrix<f64>);

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        m.clone().map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

impl CertificateReport {
    pub fn wsoc_holds(&self) -> bool {
        self.wsoc.as_ref().is_some_and(|w| w.holds)
    }

    pub fn robinson_holds(&self) -> bool {
        self.robinson.as_ref().is_some_and(|r| r.verdict.holds())
    }

    pub fn wcr_holds(&self) -> bool {
        self.wcr.as_ref().is_some_and(|r| r.verdict.holds())
    }

    pub fn nondegeneracy_holds(&self) -> bool {
        self.nondegeneracy.as_ref().is_some_and(|r| r.holds)
    }

    pub fn strict_complementarity_holds(&self) -> bool {
        self.strict_complementarity.as_ref().is_some_and(|r| r.holds)
    }
}

/// Runs every check at `(x, ω, μ)`. Verdict failures are recorded in the
/// report; only evaluation errors are returned as `Err`.
pub fn certify(
    inst: &ProblemInstance,
    x: &DVector<f64>,
    m: &Multipliers,
    source: MultiplierSource,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    m.check(inst)?;
    let ev = inst.evaluate(x)?;
    let phi = ev.phi()?;
    let feasible = phi.sqrt() <= 10.0 * tol.feasibility_tol;
    let kkt = kkt_from(&ev, m)?;
    let mut report = CertificateReport {
        x: x.iter().copied().collect(),
        multipliers: m.clone(),
        multiplier_source: source,
        feasibility: Feasibility { phi, holds: feasible },
        kkt_holds: kkt.max() <= tol.kkt_tol,
        kkt,
        partition: None,
        strict_complementarity: None,
        nondegeneracy: None,
        wcr: None,
        robinson: None,
        sigma: None,
        critical_subspace: None,
        wsoc: None,
        tolerances: tol.clone(),
        notes: Vec::new(),
    };
    if !feasible {
        report.notes.push(format!(
            "point is infeasible (phi = {phi:e}); partition-dependent checks skipped"
        ));
        return Ok(report);
    }
    let part = partition_from(&ev, Some(&m.omega), tol.partition_tol)?;
    report.strict_complementarity = Some(strict_comp_from(&ev, &part, &m.omega)?);
    report.nondegeneracy = Some(nondegeneracy_from(&ev, &part, tol.rank_tol, tol.robinson_tol));
    report.wcr = Some(wcr_from(inst, &ev, &part, tol.wcr_radius, tol.wcr_samples, tol.rank_tol, tol.seed)?);
    report.robinson = Some(robinson_from(&ev, tol)?);
    let basis = subspace_from(&ev, &part, tol.rank_tol);
    match sigma_from(&ev, &part, &m.omega, tol.partition_tol) {
        Ok(sigma) => {
            report.wsoc = Some(wsoc_from(&ev, m, &basis, &sigma, tol.wsoc_tol)?);
            report.sigma = Some(sigma);
        }
        Err(e @ (Error::SigmaGuard { .. } | Error::Indefinite { .. })) => {
            report.notes.push(format!("sigma-term unavailable: {e}"));
        }
        Err(e) => return Err(e),
    }
    report.critical_subspace = Some(basis);
    report.partition = Some(part);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn lorentz_tags_and_i_bb() {
        let p = parse_problem("vars 3\nminimize 0\ncone lorentz 2: 2, 1\ncone lorentz 2: x1, x2\ncone lorentz 3: x1, x2, x3\n")
            .unwrap();
        let x = v(&[0.0, 0.0, 0.0]);
        let part = index_partition(&p, &x, None, &tol()).unwrap();
        assert_eq!(part.lorentz_tags(), vec![Some(LorentzTag::II), Some(LorentzTag::I0), Some(LorentzTag::I0)]);

        let q = parse_problem("vars 3\nminimize 0\ncone lorentz 3: x1, x2, x3\n").unwrap();
        let om = vec![BlockPoint::lorentz(&[1.0, -1.0, 0.0])];
        let part = index_partition(&q, &v(&[1.0, 1.0, 0.0]), Some(&om), &tol()).unwrap();
        assert_eq!(
            part.blocks[0],
            BlockPartition::Lorentz {
                tag: LorentzTag::IB,
                in_i_bb: Some(true)
            }
        );
    }

    #[test]
    fn psd_partition() {
        let p = parse_problem("vars 1\nminimize 0\ncone psd 2: 1, 0, x1\n").unwrap();
        let part = index_partition(&p, &v(&[0.0]), None, &tol()).unwrap();
        match &part.blocks[0] {
            BlockPartition::Psd { alpha, beta, .. } => {
                assert_eq!(alpha, &vec![0]);
                assert_eq!(beta, &vec![1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn critical_subspaces() {
        let free = parse_problem("vars 2\nminimize x1\n").unwrap();
        let b = critical_subspace_basis(&free, &v(&[0.3, 0.1]), &tol()).unwrap();
        assert_eq!(b.dim(), 2);

        let p = parse_problem("vars 2\nminimize x1^2 - x2^2\ncone lorentz 1: x1 + 1\neq: x2\n").unwrap();
        let b = critical_subspace_basis(&p, &v(&[0.0, 0.0]), &tol()).unwrap();
        assert_eq!(b.dim(), 1);
        assert!((b.basis[(0, 0)].abs() - 1.0).abs() < 1e-12);

        let s = parse_problem("vars 2\nminimize 0\ncone psd 2: x1 + 1, 0, x2\n").unwrap();
        let b = critical_subspace_basis(&s, &v(&[0.0, 0.0]), &tol()).unwrap();
        assert_eq!(b.dim(), 1);
        assert!((b.basis[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!(b.annihilation_defect() < 1e-12);
    }

    #[test]
    fn sigma_socp_fixture() {
        let p = parse_problem("vars 3\nminimize 0\ncone lorentz 3: x1, x2, x3\n").unwrap();
        let om = vec![BlockPoint::lorentz(&[1.0, -1.0, 0.0])];
        let s = sigma_term_socp(&p, &v(&[1.0, 1.0, 0.0]), &om, &tol()).unwrap();
        let want = DMatrix::from_diagonal(&v(&[-1.0, 1.0, 1.0]));
        assert!((s - want).amax() <= 1e-12);
        let zero = vec![BlockPoint::lorentz(&[0.0, 0.0, 0.0])];
        assert_eq!(sigma_term_socp(&p, &v(&[1.0, 1.0, 0.0]), &zero, &tol()).unwrap().amax(), 0.0);
    }

    #[test]
    fn sigma_sdp_fixture() {
        let p = parse_problem("vars 2\nminimize 0\ncone psd 2: 1, x1, 0\n").unwrap();
        let om = vec![BlockPoint::Psd(SymMat::from_diagonal(&[0.0, 2.0]))];
        let s = sigma_term_sdp(&p, &v(&[0.0, 0.0]), &om, &tol()).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        assert!((s - want).amax() <= 1e-12);
    }

    #[test]
    fn wsoc_examples() {
        let p = parse_problem("vars 2\nminimize x1^2 - x2^2\ncone lorentz 1: x1 + 1\neq: x2\n").unwrap();
        let m = Multipliers::zeros(&p);
        let w = wsoc_check(&p, &v(&[0.0, 0.0]), &m, &tol()).unwrap();
        assert!(w.holds);
        assert!((w.min_rayleigh.unwrap() - 2.0).abs() < 1e-12);

        let apex = parse_problem("vars 2\nminimize (x1 + 1)^2 + x2^2\ncone lorentz 2: x1, x2\n").unwrap();
        let m = Multipliers {
            omega: vec![BlockPoint::lorentz(&[2.0, 0.0])],
            mu: DVector::zeros(0),
        };
        let w = wsoc_check(&apex, &v(&[0.0, 0.0]), &m, &tol()).unwrap();
        assert!(w.holds);
        assert_eq!(w.min_rayleigh, None);
    }

    #[test]
    fn strict_complementarity_examples() {
        let p = parse_problem("vars 1\nminimize 0\ncone psd 2: 1, 0, x1\n").unwrap();
        let good = vec![BlockPoint::Psd(SymMat::from_diagonal(&[0.0, 2.0]))];
        assert!(strict_complementarity_check(&p, &v(&[0.0]), &good, &tol()).unwrap().holds);
        let bad = vec![BlockPoint::Psd(SymMat::zeros(2))];
        assert!(!strict_complementarity_check(&p, &v(&[0.0]), &bad, &tol()).unwrap().holds);

        let q = parse_problem("vars 2\nminimize 0\ncone lorentz 2: x1, x2\n").unwrap();
        let zero = vec![BlockPoint::lorentz(&[0.0, 0.0])];
        assert!(!strict_complementarity_check(&q, &v(&[1.0, 1.0]), &zero, &tol()).unwrap().holds);
    }

    #[test]
    fn nondegeneracy_examples() {
        let p = parse_problem("vars 3\nminimize 0\ncone lorentz 3: x1, x2, x3\n").unwrap();
        let r = nondegeneracy_check(&p, &v(&[1.0, 1.0, 0.0]), &tol()).unwrap();
        assert!(r.holds);
        assert_eq!(r.family_size, 1);

        let q = parse_problem("vars 2\nminimize 0\neq: x1 + x2\neq: x1 - x2\neq: x1 + 2*x2\n").unwrap();
        assert!(!nondegeneracy_check(&q, &v(&[0.0, 0.0]), &tol()).unwrap().holds);

        let s = parse_problem("vars 2\nminimize 0\ncone psd 2: x1 + 1, 0, x2\n").unwrap();
        assert!(nondegeneracy_check(&s, &v(&[0.0, 0.0]), &tol()).unwrap().holds);
    }

    #[test]
    fn wcr_examples() {
        let affine = parse_problem("vars 2\nminimize 0\ncone lorentz 2: x1, x2\neq: x1 - x2\n").unwrap();
        let r = wcr_check(&affine, &v(&[0.0, 0.0]), 1e-4, 16, &tol(), 42).unwrap();
        assert_eq!(r.verdict, Verdict::HoldsSampled);

        let drop = parse_problem("vars 2\nminimize x1 + x2^2\ncone lorentz 2: x1, x1*x2\n").unwrap();
        let r = wcr_check(&drop, &v(&[0.0, 0.0]), 1e-4, 16, &tol(), 42).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(r.rank_at_point, 1);
        assert!(wcr_check(&drop, &v(&[0.0, 0.0]), 1e-4, 4, &tol(), 42).is_err());
    }

    #[test]
    fn robinson_examples() {
        let inner = parse_problem("vars 1\nminimize 0\ncone lorentz 2: 2, x1\neq: x1\n").unwrap();
        let r = robinson_check(&inner, &v(&[0.0]), &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.margin.unwrap() >= 2.0 - 1e-12);

        let dup = parse_problem("vars 2\nminimize 0\neq: x1\neq: x1\n").unwrap();
        let r = robinson_check(&dup, &v(&[0.0, 0.0]), &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(!r.dh_full_row_rank);

        let apex = parse_problem("vars 2\nminimize (x1 + 1)^2 + x2^2\ncone lorentz 2: x1, x2\n").unwrap();
        let r = robinson_check(&apex, &v(&[0.0, 0.0]), &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);

        let cusp = parse_problem("vars 1\nminimize -x1\ncone lorentz 1: -x1^3\n").unwrap();
        let r = robinson_check(&cusp, &v(&[0.0]), &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
    }

    #[test]
    fn certify_apex() {
        let apex = parse_problem("vars 2\nminimize (x1 + 1)^2 + x2^2\ncone lorentz 2: x1, x2\n").unwrap();
        let m = Multipliers {
            omega: vec![BlockPoint::lorentz(&[2.0, 0.0])],
            mu: DVector::zeros(0),
        };
        let r = certify(&apex, &v(&[0.0, 0.0]), &m, MultiplierSource::User, &tol()).unwrap();
        assert!(r.kkt_holds && r.kkt.max() <= 1e-12);
        assert!(r.robinson_holds() && r.wcr_holds() && r.nondegeneracy_holds());
        assert!(r.strict_complementarity_holds() && r.wsoc_holds());

        let far = certify(&apex, &v(&[-3.0, 0.0]), &m, MultiplierSource::User, &tol()).unwrap();
        assert!(!far.feasibility.holds);
        assert!(far.wsoc.is_none() && far.robinson.is_none());
    }
}
