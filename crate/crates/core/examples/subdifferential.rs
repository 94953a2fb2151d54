//! Generators of the B-subdifferential of the Lorentz projection in each
//! region, and the PSD action `V[H]`.

use conic_cert::subdiff::{lorentz_proj_subdiff, psd_proj_subdiff_apply};
use conic_cert::SymMat;
use nalgebra::DVector;

fn main() -> conic_cert::Result<()> {
    let points = [
        [2.0, 0.5, 0.5],   // interior
        [-2.0, 0.5, 0.5],  // −interior
        [0.5, 1.0, 1.0],   // outside both
        [1.0, 0.6, 0.8],   // boundary
        [-1.0, 0.6, 0.8],  // −boundary
        [0.0, 0.0, 0.0],   // origin
    ];
    for p in points {
        let g = lorentz_proj_subdiff(&DVector::from_column_slice(&p), 1e-10);
        println!("{p:?}: {:?}, {} generator(s)", g.region, g.generators.len());
        if g.generators.len() == 2 {
            println!("  midpoint of the hull: {}", g.select(0.5)?);
        }
    }
    // M = diag(1, 0, −2): the θ-dependence sits on the kernel block.
    let m = SymMat::from_diagonal(&[1.0, 0.0, -2.0]);
    let h = SymMat::from_full(&nalgebra::DMatrix::from_element(3, 3, 1.0));
    for theta in [0.0, 1.0] {
        println!("θ = {theta}: V[H] = {}", psd_proj_subdiff_apply(&m, &h, theta, None)?.to_full());
    }
    Ok(())
}
