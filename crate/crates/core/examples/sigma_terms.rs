//! Sigma-terms of the two cone families at hand-checkable points.

use conic_cert::certificates::{sigma_term_sdp, sigma_term_socp, Tolerances};
use conic_cert::{parse_problem, BlockPoint, SymMat};
use nalgebra::DVector;

fn main() -> conic_cert::Result<()> {
    let tol = Tolerances::default();
    let socp = parse_problem("vars 3\nminimize 0\ncone lorentz 3: x1, x2, x3\n")?;
    let s = sigma_term_socp(&socp, &DVector::from_column_slice(&[1.0, 1.0, 0.0]), &[BlockPoint::lorentz(&[1.0, -1.0, 0.0])], &tol)?;
    println!("SOCP: g = (1, 1, 0), ω = (1, −1, 0), σ = {s}");

    let sdp = parse_problem("vars 2\nminimize 0\ncone psd 2: 1, x1, 0\n")?;
    let w = BlockPoint::Psd(SymMat::from_diagonal(&[0.0, 2.0]));
    let s = sigma_term_sdp(&sdp, &DVector::zeros(2), &[w], &tol)?;
    println!("SDP: g = diag(1, 0), ω = diag(0, 2), σ = {s}");
    Ok(())
}
