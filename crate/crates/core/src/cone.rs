//! Cone geometry: Lorentz and PSD factors, projections, Moreau
//! decomposition, spectral data and point classification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative zero tolerance for eigenvalues and cone-boundary decisions.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// One factor of the product cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order", rename_all = "lowercase")]
pub enum BlockKind {
    /// Second-order cone `{(w₀, w̄) : w₀ ≥ ‖w̄‖}` in `R^m`; `Lorentz(1)` is the half-line.
    Lorentz(usize),
    /// Positive semidefinite cone of order `m`.
    Psd(usize),
}

impl BlockKind {
    pub fn order(&self) -> usize {
        match *self {
            BlockKind::Lorentz(m) | BlockKind::Psd(m) => m,
        }
    }

    /// Number of independent scalar entries.
    pub fn dim(&self) -> usize {
        match *self {
            BlockKind::Lorentz(m) => m,
            BlockKind::Psd(m) => m * (m + 1) / 2,
        }
    }

    pub fn zero(&self) -> BlockPoint {
        match *self {
            BlockKind::Lorentz(m) => BlockPoint::Lorentz(DVector::zeros(m)),
            BlockKind::Psd(m) => BlockPoint::Psd(SymMat::zeros(m)),
        }
    }

    /// The interior direction `e` (`(1,0,…)` or the identity).
    pub fn unit(&self) -> BlockPoint {
        match *self {
            BlockKind::Lorentz(m) => {
                let mut v = DVector::zeros(m);
                v[0] = 1.0;
                BlockPoint::Lorentz(v)
            }
            BlockKind::Psd(m) => BlockPoint::Psd(SymMat::identity(m)),
        }
    }
}

/// Ordered list of cone factors defining `K = K₁ × … × K_r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    blocks: Vec<BlockKind>,
}

impl ConeSpec {
    pub fn new(blocks: Vec<BlockKind>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("cone spec needs at least one block".into()));
        }
        if let Some(b) = blocks.iter().find(|b| b.order() == 0) {
            return Err(Error::InvalidArgument(format!("block {b:?} has order 0")));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    /// Total ambient dimension (packed entries for PSD blocks).
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(BlockKind::dim).sum()
    }
}

/// Symmetric matrix stored as a packed lower triangle, row-major
/// (`a11; a21 a22; a31 a32 a33; …`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    order: usize,
    lower: Vec<f64>,
}

#[inline]
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMat {
    pub fn new(order: usize, lower: Vec<f64>) -> Result<Self> {
        let expected = order * (order + 1) / 2;
        if lower.len() != expected {
            return Err(Error::dim("packed symmetric matrix", expected, lower.len()));
        }
        Ok(Self { order, lower })
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            lower: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut s = Self::zeros(order);
        for i in 0..order {
            s.lower[packed_index(i, i)] = 1.0;
        }
        s
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut s = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            s.lower[packed_index(i, i)] = d;
        }
        s
    }

    /// Builds from a full square matrix, averaging `A_ij` and `A_ji`.
    pub fn from_full(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut s = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                s.lower[packed_index(i, j)] = if i == j {
                    m[(i, i)]
                } else {
                    0.5 * (m[(i, j)] + m[(j, i)])
                };
            }
        }
        s
    }

    /// Builds from row-major entries of a full matrix, averaging off-diagonal pairs.
    pub fn from_rows(order: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != order * order {
            return Err(Error::dim("square matrix entries", order * order, rows.len()));
        }
        Ok(Self::from_full(&DMatrix::from_row_slice(order, order, rows)))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn packed(&self) -> &[f64] {
        &self.lower
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.lower[packed_index(i, j)] = v;
    }

    pub fn to_full(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |i, j| self.get(i, j))
    }

    /// Frobenius inner product `trace(AB)`.
    pub fn inner(&self, other: &SymMat) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.order {
            for j in 0..=i {
                let w = if i == j { 1.0 } else { 2.0 };
                acc += w * self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat {
            order: self.order,
            lower: self.lower.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        SymMat {
            order: self.order,
            lower: self.lower.iter().zip(&other.lower).map(|(a, b)| a + b).collect(),
        }
    }
}

/// A point of one cone factor's ambient space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockPoint {
    Lorentz(#[serde(with = "dvector_serde")] DVector<f64>),
    Psd(SymMat),
}

pub(crate) mod dvector_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}

impl BlockPoint {
    pub fn kind(&self) -> BlockKind {
        match self {
            BlockPoint::Lorentz(v) => BlockKind::Lorentz(v.len()),
            BlockPoint::Psd(s) => BlockKind::Psd(s.order()),
        }
    }

    pub fn lorentz(values: &[f64]) -> Self {
        BlockPoint::Lorentz(DVector::from_column_slice(values))
    }

    pub fn inner(&self, other: &BlockPoint) -> f64 {
        match (self, other) {
            (BlockPoint::Lorentz(a), BlockPoint::Lorentz(b)) => a.dot(b),
            (BlockPoint::Psd(a), BlockPoint::Psd(b)) => a.inner(b),
            _ => panic!("inner product between mismatched block kinds"),
        }
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn scale(&self, s: f64) -> BlockPoint {
        match self {
            BlockPoint::Lorentz(v) => BlockPoint::Lorentz(v * s),
            BlockPoint::Psd(m) => BlockPoint::Psd(m.scale(s)),
        }
    }

    pub fn neg(&self) -> BlockPoint {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &BlockPoint) -> BlockPoint {
        match (self, other) {
            (BlockPoint::Lorentz(a), BlockPoint::Lorentz(b)) => BlockPoint::Lorentz(a + b),
            (BlockPoint::Psd(a), BlockPoint::Psd(b)) => BlockPoint::Psd(a.add(b)),
            _ => panic!("sum of mismatched block kinds"),
        }
    }

    pub fn sub(&self, other: &BlockPoint) -> BlockPoint {
        self.add(&other.neg())
    }

    /// Packed coordinates (vector entries or the lower triangle).
    pub fn packed(&self) -> Vec<f64> {
        match self {
            BlockPoint::Lorentz(v) => v.iter().copied().collect(),
            BlockPoint::Psd(m) => m.packed().to_vec(),
        }
    }

    fn check(&self, kind: BlockKind) -> Result<()> {
        if self.kind() == kind {
            Ok(())
        } else {
            Err(Error::dim("block point vs block kind", kind.dim(), self.kind().dim()))
        }
    }
}

/// Sum of blockwise inner products.
pub fn blocks_inner(a: &[BlockPoint], b: &[BlockPoint]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

/// Euclidean / Frobenius norm over a block list.
pub fn blocks_norm(a: &[BlockPoint]) -> f64 {
    a.iter().map(|x| x.inner(x)).sum::<f64>().sqrt()
}

/// Eigen-structure of a symmetric matrix under a zero tolerance.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Descending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal matrix; column `k` pairs with `eigenvalues[k]`.
    pub vectors: DMatrix<f64>,
    /// Indices with `λ > tol`.
    pub alpha: Vec<usize>,
    /// Indices with `|λ| ≤ tol`.
    pub beta: Vec<usize>,
    /// Indices with `λ < −tol`.
    pub gamma: Vec<usize>,
    pub tol: f64,
}

/// The default eigenvalue zero threshold `DEFAULT_ZERO_TOL · max(1, max|λ|)`.
pub fn default_eigen_tol(eigenvalues: &[f64]) -> f64 {
    let scale = eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    DEFAULT_ZERO_TOL * scale
}

impl SpectralData {
    /// Decomposes `m`; `tol = None` uses [`default_eigen_tol`].
    pub fn of(m: &SymMat, tol: Option<f64>) -> Result<Self> {
        let (vals, vecs) = linalg::sym_eigen_desc(&m.to_full())?;
        let eigenvalues: Vec<f64> = vals.iter().copied().collect();
        let tol = tol.unwrap_or_else(|| default_eigen_tol(&eigenvalues));
        Ok(Self::with_partition(eigenvalues, vecs, tol))
    }

    pub(crate) fn with_partition(eigenvalues: Vec<f64>, vectors: DMatrix<f64>, tol: f64) -> Self {
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let mut gamma = Vec::new();
        for (i, &l) in eigenvalues.iter().enumerate() {
            if l > tol {
                alpha.push(i);
            } else if l < -tol {
                gamma.push(i);
            } else {
                beta.push(i);
            }
        }
        Self {
            eigenvalues,
            vectors,
            alpha,
            beta,
            gamma,
            tol,
        }
    }

    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Reassembles `U Diag(f(λ)) Uᵀ`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let d = DVector::from_iterator(self.order(), self.eigenvalues.iter().map(|&l| f(l)));
        let full = &self.vectors * DMatrix::from_diagonal(&d) * self.vectors.transpose();
        SymMat::from_full(&full)
    }

    /// Columns of `U` selected by `idx`.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.order(), idx.len());
        for (c, &i) in idx.iter().enumerate() {
            out.set_column(c, &self.vectors.column(i));
        }
        out
    }
}

/// Position of a point relative to `L` and `−L`; governs `∂_B Π_L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LorentzRegion {
    Interior,
    BoundaryPlus,
    Origin,
    NegInterior,
    NegBoundaryPlus,
    Outside,
}

fn split(z: &DVector<f64>) -> (f64, f64) {
    let bar = if z.len() > 1 { z.rows(1, z.len() - 1).norm() } else { 0.0 };
    (z[0], bar)
}

/// `z₀ − ‖z̄‖`; positive in the interior.
pub fn lorentz_margin(z: &DVector<f64>) -> f64 {
    let (z0, bar) = split(z);
    z0 - bar
}

/// Classifies `z` with `tol` used for every boundary decision.
/// `Origin` is tested before the boundary cases.
pub fn classify_lorentz(z: &DVector<f64>, tol: f64) -> LorentzRegion {
    let (z0, bar) = split(z);
    if z.norm() <= tol {
        LorentzRegion::Origin
    } else if z0 - bar > tol {
        LorentzRegion::Interior
    } else if (z0 - bar).abs() <= tol {
        LorentzRegion::BoundaryPlus
    } else if -z0 - bar > tol {
        LorentzRegion::NegInterior
    } else if (-z0 - bar).abs() <= tol {
        LorentzRegion::NegBoundaryPlus
    } else {
        LorentzRegion::Outside
    }
}

/// Euclidean projection onto the Lorentz cone `L^m`.
pub fn project_lorentz(z: &DVector<f64>, m: usize) -> Result<DVector<f64>> {
    if z.len() != m || m == 0 {
        return Err(Error::dim("lorentz projection", m, z.len()));
    }
    let (z0, bar) = split(z);
    if z0 >= bar {
        return Ok(z.clone());
    }
    if z0 <= -bar {
        return Ok(DVector::zeros(m));
    }
    // bar > |z0| ≥ 0 here, so the direction is well defined.
    let scale = 0.5 * (z0 + bar);
    let mut p = DVector::zeros(m);
    p[0] = scale;
    for k in 1..m {
        p[k] = scale * z[k] / bar;
    }
    Ok(p)
}

/// Frobenius projection onto the PSD cone together with the spectral data used.
pub fn project_psd(m: &SymMat) -> Result<(SymMat, SpectralData)> {
    let spec = SpectralData::of(m, None)?;
    let p = spec.reassemble(|l| l.max(0.0));
    Ok((p, spec))
}

/// Projection of a block point onto its own cone factor.
pub fn project_block(w: &BlockPoint) -> Result<BlockPoint> {
    match w {
        BlockPoint::Lorentz(v) => Ok(BlockPoint::Lorentz(project_lorentz(v, v.len())?)),
        BlockPoint::Psd(s) => Ok(BlockPoint::Psd(project_psd(s)?.0)),
    }
}

/// `w = plus − minus` with `plus = Π_K(w)`, `minus = Π_K(−w)`.
pub fn moreau_decompose(w: &BlockPoint, block: BlockKind) -> Result<(BlockPoint, BlockPoint)> {
    w.check(block)?;
    let plus = project_block(w)?;
    let minus = project_block(&w.neg())?;
    Ok((plus, minus))
}

/// Largest `t` with `w − t·e ∈ K` (Lorentz margin or smallest eigenvalue).
pub fn cone_margin(w: &BlockPoint) -> Result<f64> {
    match w {
        BlockPoint::Lorentz(v) => Ok(lorentz_margin(v)),
        BlockPoint::Psd(s) => Ok(*SpectralData::of(s, Some(0.0))?.eigenvalues.last().unwrap_or(&f64::INFINITY)),
    }
}

/// Moore-Penrose pseudoinverse of a (numerically) PSD matrix.
///
/// Eigenvalues `λ > tol·max(1, λ_max)` are inverted, the rest are dropped.
/// Fails when the smallest eigenvalue is below `−tol·max(1, ‖M‖_F)`.
pub fn pseudoinverse_psd(m: &SymMat, tol: f64) -> Result<SymMat> {
    let spec = SpectralData::of(m, Some(0.0))?;
    let lmin = *spec.eigenvalues.last().unwrap_or(&0.0);
    let threshold = tol * m.norm().max(1.0);
    if lmin < -threshold {
        return Err(Error::Indefinite {
            eigenvalue: lmin,
            threshold,
        });
    }
    let lmax = spec.eigenvalues.first().copied().unwrap_or(0.0);
    let cut = tol * lmax.max(1.0);
    Ok(spec.reassemble(|l| if l > cut { 1.0 / l } else { 0.0 }))
}
