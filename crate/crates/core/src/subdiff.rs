//! Generalized Jacobians of the cone projections.
//!
//! For the Lorentz cone the B-subdifferential of `Π_L` at any point is a
//! short list of explicit matrices built from [`m_matrix`]. For the PSD cone
//! the elements are linear maps given blockwise in the eigenframe of the
//! argument, see [`psd_proj_subdiff_apply`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::{classify_lorentz, LorentzRegion, SpectralData, SymMat};
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-10;

/// `½ [[1, wᵀ], [w, (1+ξ)I − ξ wwᵀ]]`, PSD for `|ξ| ≤ 1`, `‖w‖ = 1`.
pub fn m_matrix(xi: f64, w: &DVector<f64>, m: usize) -> Result<DMatrix<f64>> {
    if m < 2 || w.len() != m - 1 {
        return Err(Error::dim("m_matrix direction", m.saturating_sub(1).max(1), w.len()));
    }
    if xi.abs() > 1.0 || !xi.is_finite() {
        return Err(Error::InvalidArgument(format!("|xi| must be at most 1, got {xi}")));
    }
    if (w.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, norm is {}",
            w.norm()
        )));
    }
    let mut out = DMatrix::zeros(m, m);
    out[(0, 0)] = 0.5;
    for i in 1..m {
        out[(0, i)] = 0.5 * w[i - 1];
        out[(i, 0)] = 0.5 * w[i - 1];
        for j in 1..=i {
            let mut v = -xi * w[i - 1] * w[j - 1];
            if i == j {
                v += 1.0 + xi;
            }
            out[(i, j)] = 0.5 * v;
            out[(j, i)] = 0.5 * v;
        }
    }
    Ok(out)
}

/// The continuum `{M(ξ, w) : |ξ| ≤ 1, ‖w‖ = 1}` appearing at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricFamily {
    pub xi_min: f64,
    pub xi_max: f64,
    /// Length of the unit direction `w`.
    pub direction_dim: usize,
}

/// Generators of `∂_B Π_L(z)`, ordered so that `generators[0] ⪯ generators[1]`.
#[derive(Clone, Debug)]
pub struct LorentzSubdiffGenerators {
    pub region: LorentzRegion,
    pub generators: Vec<DMatrix<f64>>,
    pub parametric_family: Option<ParametricFamily>,
}

impl LorentzSubdiffGenerators {
    /// Element of the Clarke hull `(1−θ)·G₀ + θ·G₁`; single-valued cases ignore `θ`.
    pub fn select(&self, theta: f64) -> Result<DMatrix<f64>> {
        check_theta(theta)?;
        Ok(match self.generators.as_slice() {
            [g] => g.clone(),
            [lo, hi] => lo * (1.0 - theta) + hi * theta,
            _ => unreachable!("lorentz subdifferential lists one or two generators"),
        })
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta must lie in [0, 1], got {theta}")))
    }
}

/// B-subdifferential of the projection onto `L^m` evaluated at `z`.
///
/// Callers differentiating `x ↦ Π(−g(x))` pass `z = −g(x)`.
pub fn lorentz_proj_subdiff(z: &DVector<f64>, tol: f64) -> LorentzSubdiffGenerators {
    let m = z.len();
    let region = classify_lorentz(z, tol);
    let zero = DMatrix::zeros(m, m);
    let eye = DMatrix::identity(m, m);
    let direction = || {
        let bar = z.rows(1, m - 1).into_owned();
        let n = bar.norm();
        (z[0] / n, bar / n)
    };
    let (generators, parametric_family) = match region {
        LorentzRegion::NegInterior => (vec![zero], None),
        LorentzRegion::Interior => (vec![eye], None),
        LorentzRegion::Outside => {
            let (xi, w) = direction();
            // z₀/‖z̄‖ can leave [−1, 1] by rounding only.
            let xi = xi.clamp(-1.0, 1.0);
            (vec![m_matrix(xi, &w, m).expect("valid direction")], None)
        }
        LorentzRegion::BoundaryPlus => {
            let (_, w) = direction();
            (vec![m_matrix(1.0, &w, m).expect("valid direction"), eye], None)
        }
        LorentzRegion::NegBoundaryPlus => {
            let (_, w) = direction();
            (vec![zero, m_matrix(-1.0, &w, m).expect("valid direction")], None)
        }
        LorentzRegion::Origin => {
            let family = (m >= 2).then_some(ParametricFamily {
                xi_min: -1.0,
                xi_max: 1.0,
                direction_dim: m - 1,
            });
            (vec![zero, eye], family)
        }
    };
    LorentzSubdiffGenerators {
        region,
        generators,
        parametric_family,
    }
}

/// `B(λ)_ij = (max(λ_i,0) + max(λ_j,0)) / (|λ_i| + |λ_j|)`, with the value 1
/// when both eigenvalues are within `tol` of zero.
pub fn b_matrix(lambdas: &[f64], tol: f64) -> DMatrix<f64> {
    let m = lambdas.len();
    DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = (lambdas[i], lambdas[j]);
        if a.abs() <= tol && b.abs() <= tol {
            1.0
        } else {
            (a.max(0.0) + b.max(0.0)) / (a.abs() + b.abs())
        }
    })
}

/// Applies an element `V ∈ ∂Π_{S₊}(−M)` to `H`.
///
/// The partition is taken from the eigenvalues of `M` (α positive, β zero,
/// γ negative); the α–γ coupling uses `B(λ(−M))`, the eigenvalues of the
/// projection argument. The β×β block is `θ·H̃_ββ`, an element of the Clarke
/// subdifferential of `Π_{S₊}` at the origin.
pub fn psd_proj_subdiff_apply(m: &SymMat, h: &SymMat, theta: f64, tol: Option<f64>) -> Result<SymMat> {
    if m.order() != h.order() {
        return Err(Error::dim("subdifferential direction", m.order(), h.order()));
    }
    check_theta(theta)?;
    let spec = SpectralData::of(m, tol)?;
    Ok(psd_apply_with(&spec, h, theta))
}

/// Same as [`psd_proj_subdiff_apply`] with a precomputed decomposition of `M`.
pub fn psd_apply_with(spec: &SpectralData, h: &SymMat, theta: f64) -> SymMat {
    let u = &spec.vectors;
    let ht = u.transpose() * h.to_full() * u;
    let neg: Vec<f64> = spec.eigenvalues.iter().map(|l| -l).collect();
    let b = b_matrix(&neg, spec.tol);
    let n = spec.order();
    let mut r = DMatrix::zeros(n, n);
    for &i in &spec.alpha {
        for &j in &spec.gamma {
            let v = ht[(i, j)] * b[(i, j)];
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    for &i in &spec.beta {
        for &j in &spec.beta {
            r[(i, j)] = theta * ht[(i, j)];
        }
        for &j in &spec.gamma {
            r[(i, j)] = ht[(i, j)];
            r[(j, i)] = ht[(j, i)];
        }
    }
    for &i in &spec.gamma {
        for &j in &spec.gamma {
            r[(i, j)] = ht[(i, j)];
        }
    }
    SymMat::from_full(&(u * r * u.transpose()))
}
