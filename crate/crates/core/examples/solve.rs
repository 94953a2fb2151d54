//! The external penalty method on a small SOCP, with its outer trace.

use conic_cert::penalty::{solve, SolverConfig};
use conic_cert::parse_problem;
use nalgebra::DVector;

const PROBLEM: &str = "
# closest point of the second-order cone to (−1, 0)
vars 2
minimize (x1 + 1)^2 + x2^2
cone lorentz 2: x1, x2
";

fn main() -> conic_cert::Result<()> {
    let inst = parse_problem(PROBLEM)?;
    let out = solve(&inst, &DVector::from_column_slice(&[1.0, 1.0]), &SolverConfig::default())?;
    println!("{:>3} {:>9} {:>10} {:>10} {:>10}", "k", "rho", "stat", "sqrt(phi)", "compl");
    for row in &out.trace.rows {
        let d = &row.diagnostics;
        println!("{:>3} {:>9.1e} {:>10.2e} {:>10.2e} {:>10.2e}", row.k, row.rho, d.stationarity, d.phi.sqrt(), d.complementarity);
    }
    println!("status {}, x = {:?}, ω = {:?}", out.status.as_str(), out.x.as_slice(), out.multipliers.omega[0].packed());
    Ok(())
}
