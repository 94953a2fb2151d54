//! Projections onto the Lorentz and PSD cones and the Moreau decomposition.
//!
//! ```text
//! cargo run --example projections
//! ```

use conic_cert::cone::{classify_lorentz, moreau_decompose, project_block};
use conic_cert::{BlockKind, BlockPoint, SymMat};

fn main() -> conic_cert::Result<()> {
    let z = BlockPoint::lorentz(&[0.5, 2.0, -1.0]);
    let BlockPoint::Lorentz(zv) = &z else { unreachable!() };
    println!("z = {:?} lies in region {:?}", zv.as_slice(), classify_lorentz(zv, 1e-12));
    let (plus, minus) = moreau_decompose(&z, BlockKind::Lorentz(3))?;
    println!("Π(z)  = {:?}", plus.packed());
    println!("Π(−z) = {:?}", minus.packed());
    println!("⟨Π(z), Π(−z)⟩ = {:.2e}", plus.inner(&minus));

    // PSD: eigenvalues of [[1, 2], [2, 1]] are 3 and −1.
    let m = BlockPoint::Psd(SymMat::from_rows(2, &[1.0, 2.0, 2.0, 1.0])?);
    let BlockPoint::Psd(p) = project_block(&m)? else { unreachable!() };
    println!("Π_S(M) = {}", p.to_full());
    Ok(())
}
