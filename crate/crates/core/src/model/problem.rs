//! Problem instances, the text format, and derivative assembly for
//! `f`, `g` and `h`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::expr::{parse_expr_at, Expr};
use super::jet::{eval_jet, Jet};
use crate::cone::{self, BlockKind, BlockPoint, ConeSpec, SymMat};
use crate::error::{Error, Result};

/// One cone factor with its entry expressions (vector entries for Lorentz,
/// row-major lower triangle for PSD).
#[derive(Clone, Debug, PartialEq)]
pub struct ConeBlock {
    pub kind: BlockKind,
    pub entries: Vec<Expr>,
}

/// `min f(x)  s.t.  g(x) ∈ K, h(x) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    n: usize,
    objective: Expr,
    blocks: Vec<ConeBlock>,
    equalities: Vec<Expr>,
}

/// Lagrange multipliers `(ω, μ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub omega: Vec<BlockPoint>,
    #[serde(with = "crate::cone::dvector_serde")]
    pub mu: DVector<f64>,
}

impl Multipliers {
    pub fn zeros(inst: &ProblemInstance) -> Self {
        Multipliers {
            omega: inst.blocks.iter().map(|b| b.kind.zero()).collect(),
            mu: DVector::zeros(inst.p()),
        }
    }

    pub fn check(&self, inst: &ProblemInstance) -> Result<()> {
        if self.omega.len() != inst.blocks.len() {
            return Err(Error::dim("number of multiplier blocks", inst.blocks.len(), self.omega.len()));
        }
        for (w, b) in self.omega.iter().zip(&inst.blocks) {
            if w.kind() != b.kind {
                return Err(Error::dim("multiplier block size", b.kind.dim(), w.kind().dim()));
            }
        }
        if self.mu.len() != inst.p() {
            return Err(Error::dim("equality multipliers", inst.p(), self.mu.len()));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        (cone::blocks_norm(&self.omega).powi(2) + self.mu.norm_squared()).sqrt()
    }
}

impl ProblemInstance {
    pub fn new(n: usize, objective: Expr, blocks: Vec<ConeBlock>, equalities: Vec<Expr>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("problem needs at least one variable".into()));
        }
        let arity_ok = |e: &Expr| e.arity() <= n;
        for b in &blocks {
            if b.kind.order() == 0 {
                return Err(Error::InvalidArgument("cone blocks need order ≥ 1".into()));
            }
            if b.entries.len() != b.kind.dim() {
                return Err(Error::dim("cone block entry count", b.kind.dim(), b.entries.len()));
            }
        }
        let all_ok = arity_ok(&objective)
            && blocks.iter().all(|b| b.entries.iter().all(arity_ok))
            && equalities.iter().all(arity_ok);
        if !all_ok {
            return Err(Error::InvalidArgument(format!("expression references a variable beyond x{n}")));
        }
        Ok(ProblemInstance {
            n,
            objective,
            blocks,
            equalities,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.equalities.len()
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn equalities(&self) -> &[Expr] {
        &self.equalities
    }

    pub fn block_kinds(&self) -> Vec<BlockKind> {
        self.blocks.iter().map(|b| b.kind).collect()
    }

    /// The product cone; fails when the problem has no cone constraint.
    pub fn cone_spec(&self) -> Result<ConeSpec> {
        ConeSpec::new(self.block_kinds())
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> Result<Evaluation> {
        if x.len() != self.n {
            return Err(Error::dim("evaluation point", self.n, x.len()));
        }
        let xs = x.as_slice();
        let f = eval_jet(&self.objective, xs)?;
        let g = self
            .blocks
            .iter()
            .map(|b| {
                Ok(BlockEval {
                    kind: b.kind,
                    entries: b.entries.iter().map(|e| eval_jet(e, xs)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        let h = self.equalities.iter().map(|e| eval_jet(e, xs)).collect::<Result<_>>()?;
        Ok(Evaluation { x: x.clone(), f, g, h })
    }

    pub fn eval_g(&self, x: &DVector<f64>) -> Result<Vec<BlockPoint>> {
        Ok(self.evaluate(x)?.g_values())
    }

    pub fn eval_dg_apply(&self, x: &DVector<f64>, d: &DVector<f64>) -> Result<Vec<BlockPoint>> {
        self.evaluate(x)?.dg_apply(d)
    }

    pub fn eval_dg_adjoint(&self, x: &DVector<f64>, w: &[BlockPoint]) -> Result<DVector<f64>> {
        self.evaluate(x)?.dg_adjoint(w)
    }

    pub fn eval_d2g_adjoint(&self, x: &DVector<f64>, w: &[BlockPoint]) -> Result<DMatrix<f64>> {
        self.evaluate(x)?.d2g_adjoint(w)
    }

    pub fn lagrangian_grad(&self, x: &DVector<f64>, m: &Multipliers) -> Result<DVector<f64>> {
        self.evaluate(x)?.lagrangian_grad(m)
    }

    pub fn lagrangian_hess(&self, x: &DVector<f64>, m: &Multipliers) -> Result<DMatrix<f64>> {
        self.evaluate(x)?.lagrangian_hess(m)
    }

    pub fn infeasibility_phi(&self, x: &DVector<f64>) -> Result<f64> {
        self.evaluate(x)?.phi()
    }

    pub fn infeasibility_phi_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.evaluate(x)?.phi_grad()
    }

    /// Serializes to the text format; `parse_problem(&inst.to_text())`
    /// reproduces `inst`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars {}", self.n);
        let _ = writeln!(s, "minimize {}", self.objective);
        for b in &self.blocks {
            let (name, m) = match b.kind {
                BlockKind::Lorentz(m) => ("lorentz", m),
                BlockKind::Psd(m) => ("psd", m),
            };
            let list: Vec<String> = b.entries.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "cone {name} {m}: {}", list.join(", "));
        }
        for e in &self.equalities {
            let _ = writeln!(s, "eq: {e}");
        }
        s
    }
}

/// Entry jets of one cone block.
#[derive(Clone, Debug)]
pub struct BlockEval {
    pub kind: BlockKind,
    pub entries: Vec<Jet>,
}

/// Weights turning packed coordinates into the block inner product
/// (off-diagonal PSD entries count twice).
fn inner_weights(kind: BlockKind) -> Vec<f64> {
    match kind {
        BlockKind::Lorentz(m) => vec![1.0; m],
        BlockKind::Psd(m) => {
            let mut w = Vec::with_capacity(kind.dim());
            for r in 0..m {
                for c in 0..=r {
                    w.push(if r == c { 1.0 } else { 2.0 });
                }
            }
            w
        }
    }
}

impl BlockEval {
    fn build(&self, vals: Vec<f64>) -> BlockPoint {
        match self.kind {
            BlockKind::Lorentz(_) => BlockPoint::Lorentz(DVector::from_vec(vals)),
            BlockKind::Psd(m) => BlockPoint::Psd(SymMat::new(m, vals).expect("packed length matches")),
        }
    }

    pub fn value(&self) -> BlockPoint {
        self.build(self.entries.iter().map(|j| j.value).collect())
    }

    /// `∂_l g_i(x)`.
    pub fn partial(&self, l: usize) -> BlockPoint {
        self.build(self.entries.iter().map(|j| j.grad[l]).collect())
    }

    /// `Dg_i(x)[d]`.
    pub fn apply(&self, d: &DVector<f64>) -> BlockPoint {
        self.build(self.entries.iter().map(|j| j.grad.dot(d)).collect())
    }

    fn weighted(&self, w: &BlockPoint) -> Result<Vec<f64>> {
        if w.kind() != self.kind {
            return Err(Error::dim("block element vs block", self.kind.dim(), w.kind().dim()));
        }
        Ok(w.packed().iter().zip(inner_weights(self.kind)).map(|(a, b)| a * b).collect())
    }

    /// `Dg_i(x)*[w] = [⟨∂_l g_i, w⟩]_l`.
    pub fn adjoint(&self, w: &BlockPoint) -> Result<DVector<f64>> {
        let n = self.entries.first().map_or(0, |j| j.dim());
        let mut out = DVector::zeros(n);
        for (j, c) in self.entries.iter().zip(self.weighted(w)?) {
            out.axpy(c, &j.grad, 1.0);
        }
        Ok(out)
    }

    /// `D²g_i(x)*[w] = [⟨∂_k∂_l g_i, w⟩]_{kl}`.
    pub fn hess_adjoint(&self, w: &BlockPoint) -> Result<DMatrix<f64>> {
        let n = self.entries.first().map_or(0, |j| j.dim());
        let mut out = DMatrix::zeros(n, n);
        for (j, c) in self.entries.iter().zip(self.weighted(w)?) {
            out += &j.hess * c;
        }
        Ok(out)
    }

    /// Rows are gradients of the packed entries.
    pub fn jacobian(&self) -> DMatrix<f64> {
        let n = self.entries.first().map_or(0, |j| j.dim());
        let mut out = DMatrix::zeros(self.entries.len(), n);
        for (r, j) in self.entries.iter().enumerate() {
            out.set_row(r, &j.grad.transpose());
        }
        out
    }
}

/// All jets of a problem at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub x: DVector<f64>,
    pub f: Jet,
    pub g: Vec<BlockEval>,
    pub h: Vec<Jet>,
}

impl Evaluation {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn g_values(&self) -> Vec<BlockPoint> {
        self.g.iter().map(|b| b.value()).collect()
    }

    pub fn h_values(&self) -> DVector<f64> {
        DVector::from_iterator(self.h.len(), self.h.iter().map(|j| j.value))
    }

    /// `p × n` Jacobian of `h`.
    pub fn dh(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.h.len(), self.n());
        for (r, j) in self.h.iter().enumerate() {
            out.set_row(r, &j.grad.transpose());
        }
        out
    }

    fn check_blocks(&self, w: &[BlockPoint]) -> Result<()> {
        if w.len() != self.g.len() {
            return Err(Error::dim("number of cone blocks", self.g.len(), w.len()));
        }
        Ok(())
    }

    pub fn dg_apply(&self, d: &DVector<f64>) -> Result<Vec<BlockPoint>> {
        if d.len() != self.n() {
            return Err(Error::dim("direction", self.n(), d.len()));
        }
        Ok(self.g.iter().map(|b| b.apply(d)).collect())
    }

    pub fn dg_adjoint(&self, w: &[BlockPoint]) -> Result<DVector<f64>> {
        self.check_blocks(w)?;
        let mut out = DVector::zeros(self.n());
        for (b, wi) in self.g.iter().zip(w) {
            out += b.adjoint(wi)?;
        }
        Ok(out)
    }

    pub fn d2g_adjoint(&self, w: &[BlockPoint]) -> Result<DMatrix<f64>> {
        self.check_blocks(w)?;
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for (b, wi) in self.g.iter().zip(w) {
            out += b.hess_adjoint(wi)?;
        }
        Ok(out)
    }

    fn check_mu(&self, mu: &DVector<f64>) -> Result<()> {
        if mu.len() != self.h.len() {
            return Err(Error::dim("equality multipliers", self.h.len(), mu.len()));
        }
        Ok(())
    }

    /// `∇f − Dg*[ω] + Dhᵀμ`.
    pub fn lagrangian_grad(&self, m: &Multipliers) -> Result<DVector<f64>> {
        self.check_mu(&m.mu)?;
        let mut out = &self.f.grad - self.dg_adjoint(&m.omega)?;
        for (j, mu) in self.h.iter().zip(m.mu.iter()) {
            out.axpy(*mu, &j.grad, 1.0);
        }
        Ok(out)
    }

    /// `∇²f − D²g*[ω] + Σ μ_j ∇²h_j`.
    pub fn lagrangian_hess(&self, m: &Multipliers) -> Result<DMatrix<f64>> {
        self.check_mu(&m.mu)?;
        let mut out = &self.f.hess - self.d2g_adjoint(&m.omega)?;
        for (j, mu) in self.h.iter().zip(m.mu.iter()) {
            out += &j.hess * *mu;
        }
        Ok(out)
    }

    /// `Π_{K_i}(−g_i(x))` per block.
    pub fn minus_projections(&self) -> Result<Vec<BlockPoint>> {
        self.g.iter().map(|b| cone::project_block(&b.value().neg())).collect()
    }

    /// `Φ = ½(‖h‖² + Σ ‖Π(−g_i)‖²)`.
    pub fn phi(&self) -> Result<f64> {
        let proj = self.minus_projections()?;
        Ok(0.5 * (self.h_values().norm_squared() + cone::blocks_norm(&proj).powi(2)))
    }

    /// `∇Φ = Dhᵀh − Dg*[Π(−g)]`.
    pub fn phi_grad(&self) -> Result<DVector<f64>> {
        let proj = self.minus_projections()?;
        Ok(self.dh().transpose() * self.h_values() - self.dg_adjoint(&proj)?)
    }
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// One logical statement: its physical line segments `(line, col, text)`.
struct Statement {
    parts: Vec<(usize, usize, String)>,
}

fn statements(text: &str) -> Vec<Statement> {
    let mut out = Vec::new();
    let mut current: Option<Statement> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let lead = body.chars().take_while(|c| c.is_whitespace()).count();
        let content: String = body.chars().skip(lead).collect();
        let content = content.trim_end().to_string();
        let continues = content.ends_with(',');
        let part = (line_no, lead + 1, content);
        match current.as_mut() {
            Some(st) => st.parts.push(part),
            None => current = Some(Statement { parts: vec![part] }),
        }
        if !continues {
            out.extend(current.take());
        }
    }
    out.extend(current.take());
    out
}

/// Splits a comma-separated entry list spread across segments.
fn entry_pieces(segs: &[(usize, usize, String)]) -> Result<Vec<(usize, usize, String)>> {
    let mut out = Vec::new();
    for (k, (line, col, s)) in segs.iter().enumerate() {
        let last_seg = k + 1 == segs.len();
        let mut start = 0usize;
        let chars: Vec<char> = s.chars().collect();
        let mut pieces = Vec::new();
        for (i, &c) in chars.iter().enumerate() {
            if c == ',' {
                pieces.push((start, i));
                start = i + 1;
            }
        }
        pieces.push((start, chars.len()));
        let n_pieces = pieces.len();
        for (pi, (a, b)) in pieces.into_iter().enumerate() {
            let piece: String = chars[a..b].iter().collect();
            if piece.trim().is_empty() {
                // The empty tail after a line-ending comma joins the next line.
                if pi + 1 == n_pieces && !last_seg {
                    continue;
                }
                return Err(perr(*line, col + a, "empty entry in list"));
            }
            out.push((*line, col + a, piece));
        }
    }
    Ok(out)
}

/// Parses the problem text format (see the crate README for the grammar).
pub fn parse_problem(text: &str) -> Result<ProblemInstance> {
    let mut n: Option<usize> = None;
    let mut objective: Option<Expr> = None;
    let mut blocks = Vec::new();
    let mut equalities = Vec::new();

    for st in statements(text) {
        let (line, col, first) = st.parts[0].clone();
        let keyword: String = first.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
        let rest_off = keyword.chars().count();
        let rest: String = first.chars().skip(rest_off).collect();
        let need_vars = |n: Option<usize>| n.ok_or_else(|| perr(line, col, "`vars` must come before other statements"));
        match keyword.as_str() {
            "vars" => {
                if n.is_some() {
                    return Err(perr(line, col, "duplicate `vars` statement"));
                }
                let t = rest.trim();
                let v: usize = t
                    .parse()
                    .map_err(|_| perr(line, col + rest_off, format!("expected a variable count, found `{t}`")))?;
                if v == 0 {
                    return Err(perr(line, col + rest_off, "variable count must be positive"));
                }
                if st.parts.len() > 1 {
                    return Err(perr(line, col, "`vars` takes a single number"));
                }
                n = Some(v);
            }
            "minimize" => {
                let nv = need_vars(n)?;
                if objective.is_some() {
                    return Err(perr(line, col, "duplicate `minimize` statement"));
                }
                if st.parts.len() > 1 {
                    return Err(perr(line, col, "objective must fit on one line"));
                }
                let mut body = rest.as_str();
                let mut off = rest_off;
                let trimmed = body.trim_start();
                if let Some(after) = trimmed.strip_prefix(':') {
                    off += body.chars().count() - after.chars().count();
                    body = after;
                }
                objective = Some(parse_expr_at(body, nv, line, col + off)?);
            }
            "eq" => {
                let nv = need_vars(n)?;
                let trimmed = rest.trim_start();
                let Some(after) = trimmed.strip_prefix(':') else {
                    return Err(perr(line, col + rest_off, "expected `:` after `eq`"));
                };
                if st.parts.len() > 1 {
                    return Err(perr(line, col, "equality must fit on one line"));
                }
                let off = rest_off + rest.chars().count() - after.chars().count();
                equalities.push(parse_expr_at(after, nv, line, col + off)?);
            }
            "cone" => {
                let nv = need_vars(n)?;
                let Some(colon) = rest.find(':') else {
                    return Err(perr(line, col, "expected `:` in cone statement"));
                };
                let header: Vec<&str> = rest[..colon].split_whitespace().collect();
                let (kind_name, m_text) = match header.as_slice() {
                    [k, m] => (*k, *m),
                    _ => return Err(perr(line, col, "expected `cone lorentz|psd <order>:`")),
                };
                let m: usize = m_text
                    .parse()
                    .ok()
                    .filter(|&m| m > 0)
                    .ok_or_else(|| perr(line, col, format!("invalid cone order `{m_text}`")))?;
                let kind = match kind_name {
                    "lorentz" => BlockKind::Lorentz(m),
                    "psd" => BlockKind::Psd(m),
                    other => return Err(perr(line, col, format!("unknown cone kind `{other}`"))),
                };
                let list_col = col + rest_off + rest[..colon].chars().count() + 1;
                let mut segs = vec![(line, list_col, rest[colon + 1..].to_string())];
                segs.extend(st.parts[1..].iter().cloned());
                let pieces = entry_pieces(&segs)?;
                if pieces.len() != kind.dim() {
                    return Err(perr(
                        line,
                        col,
                        format!("{kind_name} block of order {m} needs {} entries, found {}", kind.dim(), pieces.len()),
                    ));
                }
                let entries = pieces
                    .iter()
                    .map(|(l, c, s)| parse_expr_at(s, nv, *l, *c))
                    .collect::<Result<Vec<_>>>()?;
                blocks.push(ConeBlock { kind, entries });
            }
            "" => return Err(perr(line, col, "expected a statement keyword")),
            other => return Err(perr(line, col, format!("unknown statement `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| perr(1, 1, "missing `vars` statement"))?;
    let objective = objective.ok_or_else(|| perr(1, 1, "missing `minimize` statement"))?;
    ProblemInstance::new(n, objective, blocks, equalities)
}
