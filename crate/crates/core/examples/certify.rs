//! Certifying a given point and multiplier: KKT, index partition, critical
//! subspace, sigma-term, WSOC and the constraint qualifications.

use conic_cert::certificates::{certify, MultiplierSource, Tolerances};
use conic_cert::model::Multipliers;
use conic_cert::{parse_problem, BlockPoint};
use nalgebra::DVector;

const PROBLEM: &str = "
vars 2
minimize -x1 - 0.25*x2^2
cone lorentz 3: 1, x1, x2
";

fn main() -> conic_cert::Result<()> {
    let inst = parse_problem(PROBLEM)?;
    let x = DVector::from_column_slice(&[1.0, 0.0]);
    let m = Multipliers {
        omega: vec![BlockPoint::lorentz(&[1.0, -1.0, 0.0])],
        mu: DVector::zeros(0),
    };
    let c = certify(&inst, &x, &m, MultiplierSource::User, &Tolerances::default())?;
    println!("KKT residual {:.1e} ({})", c.kkt.max(), if c.kkt_holds { "holds" } else { "fails" });
    if let Some(p) = &c.partition {
        println!("partition   {:?}", p.blocks);
    }
    if let Some(s) = &c.sigma {
        println!("sigma-term  {s}");
    }
    if let Some(b) = &c.critical_subspace {
        println!("critical subspace of dimension {}", b.dim());
    }
    let rayleigh = c.wsoc.as_ref().and_then(|w| w.min_rayleigh);
    println!("WSOC        {} (min Rayleigh {rayleigh:?})", c.wsoc_holds());
    println!("Robinson    {:?}", c.robinson.as_ref().map(|r| r.verdict));
    println!("WCR         {:?}", c.wcr.as_ref().map(|w| w.verdict));
    println!("nondegenerate {}, strictly complementary {}", c.nondegeneracy_holds(), c.strict_complementarity_holds());
    Ok(())
}
