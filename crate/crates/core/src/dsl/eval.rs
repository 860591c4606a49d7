use super::ast::{BinOp, Expr, Func};
use super::Coords;
use crate::error::{DomainKind, Error, Result};
use crate::jets::{jet_lift_var, Jet2};

fn domain_error(kind: DomainKind, e: &Expr, coords: Option<&Coords>) -> Error {
    let text = match coords {
        Some(c) => e.display(c).to_string(),
        None => e.display(&Coords::anonymous()).to_string(),
    };
    Error::Domain { kind, expr: text }
}

fn var_index(i: usize, point: &[f64]) -> Result<usize> {
    if i < point.len() {
        Ok(i)
    } else {
        Err(Error::IndexOutOfRange {
            index: i,
            dim: point.len(),
        })
    }
}

pub(crate) fn real(e: &Expr, point: &[f64], coords: Option<&Coords>) -> Result<f64> {
    let v = match e {
        Expr::Const(c) => *c,
        Expr::Var(i) => point[var_index(*i, point)?],
        Expr::Neg(a) => -real(a, point, coords)?,
        Expr::Binary(op, a, b) => {
            let x = real(a, point, coords)?;
            let y = real(b, point, coords)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(domain_error(DomainKind::DivisionByZero, e, coords));
                    }
                    x / y
                }
            }
        }
        Expr::Pow(a, k) => {
            let x = real(a, point, coords)?;
            if *k < 0 && x == 0.0 {
                return Err(domain_error(DomainKind::ZeroToNegativePower, e, coords));
            }
            if *k == 0 {
                1.0
            } else {
                x.powi(*k)
            }
        }
        Expr::Call(f, a) => {
            let x = real(a, point, coords)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain_error(DomainKind::LogNonPositive, e, coords));
                    }
                    x.ln()
                }
            }
        }
    };
    Ok(v)
}

pub(crate) fn jet(e: &Expr, point: &[f64], coords: Option<&Coords>) -> Result<Jet2> {
    let n = point.len();
    let relabel = |err: Error| match err {
        Error::Domain { kind, .. } => domain_error(kind, e, coords),
        other => other,
    };
    let j = match e {
        Expr::Const(c) => Jet2::constant(*c, n),
        Expr::Var(i) => jet_lift_var(var_index(*i, point)?, point)?,
        Expr::Neg(a) => jet(a, point, coords)?.neg(),
        Expr::Binary(op, a, b) => {
            let x = jet(a, point, coords)?;
            let y = jet(b, point, coords)?;
            match op {
                BinOp::Add => x.add(&y),
                BinOp::Sub => x.sub(&y),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => x.div(&y).map_err(relabel)?,
            }
        }
        Expr::Pow(a, k) => jet(a, point, coords)?.powi(*k).map_err(relabel)?,
        Expr::Call(f, a) => {
            let x = jet(a, point, coords)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => x.ln().map_err(relabel)?,
            }
        }
    };
    Ok(j)
}

/// Evaluates `e` at `point` in plain floating point.
pub fn eval_real(e: &Expr, point: &[f64]) -> Result<f64> {
    real(e, point, None)
}

/// Evaluates value, gradient and Hessian of `e` at `point`. The value
/// component follows the same arithmetic path as [`eval_real`].
pub fn eval_jet(e: &Expr, point: &[f64]) -> Result<Jet2> {
    jet(e, point, None)
}
