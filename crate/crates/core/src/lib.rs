//! Regularized external-penalty solver and stationarity certificates for
//! small nonlinear second-order-cone and semidefinite programs.
//!
//! The crate is organised bottom-up:
//!
//! - [`cone`]: projections onto Lorentz and PSD cones, Moreau decomposition,
//!   spectral data and point classification.
//! - [`subdiff`]: B-/Clarke-subdifferential elements of those projections.
//! - [`model`]: the problem text format, second-order forward-mode AD and
//!   Lagrangian / infeasibility machinery.
//! - [`penalty`]: the outer penalty loop with quasi-Newton inner solves,
//!   AKKT tracking and a generalized-Hessian curvature probe.
//! - [`certificates`]: KKT residuals, critical subspaces, sigma-terms, WSOC
//!   and constraint-qualification checks.
//! - [`harness`]: report documents, the bundled corpus runner and the
//!   command implementations behind the `conic-cert` binary.

pub mod certificates;
pub mod cone;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod penalty;
pub mod subdiff;

pub use cone::{BlockKind, BlockPoint, ConeSpec, LorentzRegion, SpectralData, SymMat};
pub use error::{Error, Result};
pub use model::{parse_problem, Expr, Jet, ProblemInstance};
pub use penalty::{solve, SolveStatus, SolverConfig};
