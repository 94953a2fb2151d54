//! Parsing expressions and evaluating value, gradient and Hessian in one pass.

use conic_cert::model::{eval_jet, parse_expr};

fn main() -> conic_cert::Result<()> {
    let e = parse_expr("x1^2*sin(x2) + exp(x1*x2) - sqrt(1 + x2^2)", 2)?;
    let jet = eval_jet(&e, &[0.5, -1.0])?;
    println!("f       = {e}");
    println!("f(x)    = {:.6}", jet.value);
    println!("∇f(x)   = {:?}", jet.grad.as_slice());
    println!("∇²f(x)  = {}", jet.hess);
    Ok(())
}
