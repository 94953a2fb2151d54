//! Second-order forward-mode AD over [`Expr`] trees.

use nalgebra::{DMatrix, DVector};

use super::expr::{Expr, Func};
use crate::error::{Error, Result};

/// Value, gradient and Hessian of a scalar expression at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// Builds an exactly symmetric matrix from its lower triangle.
fn sym(n: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = f(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

impl Jet {
    pub fn constant(n: usize, c: f64) -> Self {
        Jet {
            value: c,
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
        }
    }

    pub fn variable(n: usize, i: usize, x: f64) -> Self {
        let mut grad = DVector::zeros(n);
        grad[i] = 1.0;
        Jet {
            value: x,
            grad,
            hess: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    fn add(&self, o: &Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: &self.grad + &o.grad,
            hess: &self.hess + &o.hess,
        }
    }

    fn sub(&self, o: &Jet) -> Jet {
        Jet {
            value: self.value - o.value,
            grad: &self.grad - &o.grad,
            hess: &self.hess - &o.hess,
        }
    }

    fn neg(&self) -> Jet {
        Jet {
            value: -self.value,
            grad: -&self.grad,
            hess: -&self.hess,
        }
    }

    fn mul(&self, o: &Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            value: a.value * b.value,
            grad: &a.grad * b.value + &b.grad * a.value,
            hess: sym(a.dim(), |i, j| {
                a.hess[(i, j)] * b.value
                    + b.hess[(i, j)] * a.value
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i]
            }),
        }
    }

    /// `φ(self)` given `φ`, `φ'` and `φ''` at `self.value`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        Jet {
            value: f0,
            grad: &self.grad * f1,
            hess: sym(self.dim(), |i, j| f1 * self.hess[(i, j)] + f2 * self.grad[i] * self.grad[j]),
        }
    }
}

fn domain(node: &Expr, message: impl Into<String>) -> Error {
    Error::Domain {
        node: node.to_string(),
        message: message.into(),
    }
}

fn checked(node: &Expr, j: Jet) -> Result<Jet> {
    if j.value.is_finite() && j.grad.iter().all(|v| v.is_finite()) && j.hess.iter().all(|v| v.is_finite()) {
        Ok(j)
    } else {
        Err(domain(node, "non-finite result"))
    }
}

/// Evaluates value, gradient and Hessian of `expr` at `x`.
pub fn eval_jet(expr: &Expr, x: &[f64]) -> Result<Jet> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("evaluation point has non-finite entries".into()));
    }
    if expr.arity() > x.len() {
        return Err(Error::dim("expression arity vs point", expr.arity(), x.len()));
    }
    jet(expr, x)
}

fn jet(e: &Expr, x: &[f64]) -> Result<Jet> {
    let n = x.len();
    let out = match e {
        Expr::Const(c) => Jet::constant(n, *c),
        Expr::Var(i) => Jet::variable(n, *i, x[*i]),
        Expr::Neg(a) => jet(a, x)?.neg(),
        Expr::Add(a, b) => jet(a, x)?.add(&jet(b, x)?),
        Expr::Sub(a, b) => jet(a, x)?.sub(&jet(b, x)?),
        Expr::Mul(a, b) => jet(a, x)?.mul(&jet(b, x)?),
        Expr::Div(a, b) => {
            let (ja, jb) = (jet(a, x)?, jet(b, x)?);
            let v = jb.value;
            if v == 0.0 {
                return Err(domain(e, "division by zero"));
            }
            ja.mul(&jb.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
        }
        Expr::Pow(a, k) => {
            let ja = jet(a, x)?;
            let v = ja.value;
            let k = *k;
            if k < 0 && v == 0.0 {
                return Err(domain(e, "negative power of zero"));
            }
            let kf = k as f64;
            let f0 = v.powi(k);
            let f1 = if k == 0 { 0.0 } else { kf * v.powi(k - 1) };
            let f2 = if k == 0 || k == 1 { 0.0 } else { kf * (kf - 1.0) * v.powi(k - 2) };
            ja.chain(f0, f1, f2)
        }
        Expr::Func(func, a) => {
            let ja = jet(a, x)?;
            let v = ja.value;
            match func {
                Func::Sin => ja.chain(v.sin(), v.cos(), -v.sin()),
                Func::Cos => ja.chain(v.cos(), -v.sin(), -v.cos()),
                Func::Exp => {
                    let ev = v.exp();
                    ja.chain(ev, ev, ev)
                }
                Func::Log => {
                    if v <= 0.0 {
                        return Err(domain(e, format!("log of nonpositive value {v}")));
                    }
                    ja.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                Func::Sqrt => {
                    if v <= 0.0 {
                        return Err(domain(e, format!("sqrt is not differentiable at {v}")));
                    }
                    let s = v.sqrt();
                    ja.chain(s, 0.5 / s, -0.25 / (s * v))
                }
            }
        }
    };
    checked(e, out)
}

/// Value only, without derivative propagation.
pub fn eval_value(expr: &Expr, x: &[f64]) -> Result<f64> {
    let v = match expr {
        Expr::Const(c) => *c,
        Expr::Var(i) => *x.get(*i).ok_or_else(|| Error::dim("variable index", i + 1, x.len()))?,
        Expr::Neg(a) => -eval_value(a, x)?,
        Expr::Add(a, b) => eval_value(a, x)? + eval_value(b, x)?,
        Expr::Sub(a, b) => eval_value(a, x)? - eval_value(b, x)?,
        Expr::Mul(a, b) => eval_value(a, x)? * eval_value(b, x)?,
        Expr::Div(a, b) => {
            let d = eval_value(b, x)?;
            if d == 0.0 {
                return Err(domain(expr, "division by zero"));
            }
            eval_value(a, x)? / d
        }
        Expr::Pow(a, k) => {
            let v = eval_value(a, x)?;
            if *k < 0 && v == 0.0 {
                return Err(domain(expr, "negative power of zero"));
            }
            v.powi(*k)
        }
        Expr::Func(f, a) => {
            let v = eval_value(a, x)?;
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Log if v <= 0.0 => return Err(domain(expr, format!("log of nonpositive value {v}"))),
                Func::Log => v.ln(),
                Func::Sqrt if v < 0.0 => return Err(domain(expr, format!("sqrt of negative value {v}"))),
                Func::Sqrt => v.sqrt(),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(expr, "non-finite result"))
    }
}
