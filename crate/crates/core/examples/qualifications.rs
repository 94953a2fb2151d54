//! Robinson's CQ, weak constant rank and nondegeneracy on instances where
//! they separate.

use conic_cert::certificates::{nondegeneracy_check, robinson_check, wcr_check, Tolerances};
use conic_cert::parse_problem;
use nalgebra::DVector;

fn main() -> conic_cert::Result<()> {
    let tol = Tolerances::default();
    let cases = [
        ("active linear constraint", "vars 2\nminimize x1\ncone lorentz 1: x1\n", [0.0, 0.0]),
        ("rank drops off the point", "vars 2\nminimize x1\ncone lorentz 2: x1, x1*x2\n", [0.0, 0.0]),
        ("duplicated equality", "vars 2\nminimize x2\neq: x1\neq: x1\n", [0.0, 0.0]),
        ("degenerate cubic", "vars 2\nminimize -x1\ncone lorentz 1: -x1^3\n", [0.0, 0.0]),
    ];
    println!("{:<26} {:<14} {:<14} nondegenerate", "instance", "robinson", "wcr");
    for (name, text, x) in cases {
        let inst = parse_problem(text)?;
        let x = DVector::from_column_slice(&x);
        let r = robinson_check(&inst, &x, &tol)?;
        let w = wcr_check(&inst, &x, tol.wcr_radius, tol.wcr_samples, &tol, tol.seed)?;
        let n = nondegeneracy_check(&inst, &x, &tol)?;
        println!("{name:<26} {:<14} {:<14} {}", format!("{:?}", r.verdict), format!("{:?}", w.verdict), n.holds);
    }
    Ok(())
}
