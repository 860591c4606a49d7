//! Order-2 forward-mode differentiation.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a scalar function of
//! the chart coordinates at one point. Arithmetic on jets applies the chain and
//! Leibniz rules up to second order, so evaluating an expression tree on jets
//! yields `f(p)`, `D_p f` and `D²_p f` in one pass.
//!
//! Hessians are always assembled from the upper triangle and mirrored, which
//! keeps them exactly symmetric.
//!
//! The finite-difference helpers at the bottom of the module are the
//! independent oracle for the jet engine.

use nalgebra::{DMatrix, DVector};

use crate::error::{DomainKind, Error, Result};

/// Largest chart dimension accepted anywhere in the crate.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// Step sizes for the central-difference oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    /// Step for first derivatives.
    pub fd_step: f64,
    /// Step for second derivatives.
    pub fd_step_second: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            fd_step_second: 1e-4,
        }
    }
}

impl DiffConfig {
    pub const MIN_STEP: f64 = 1e-8;
    pub const MAX_STEP: f64 = 1e-2;

    pub fn new(fd_step: f64, fd_step_second: f64) -> Result<Self> {
        let cfg = Self {
            fd_step,
            fd_step_second,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, h) in [
            ("fd_step", self.fd_step),
            ("fd_step_second", self.fd_step_second),
        ] {
            if !(Self::MIN_STEP..=Self::MAX_STEP).contains(&h) {
                return Err(Error::Config(format!(
                    "{name} = {h:e} outside [{:e}, {:e}]",
                    Self::MIN_STEP,
                    Self::MAX_STEP
                )));
            }
        }
        Ok(())
    }
}

/// Elementary operations understood by [`jet_combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    PowInt(i32),
    Sin,
    Cos,
    Exp,
    Log,
    Neg,
}

impl JetOp {
    pub fn name(self) -> &'static str {
        match self {
            JetOp::Add => "add",
            JetOp::Sub => "sub",
            JetOp::Mul => "mul",
            JetOp::Div => "div",
            JetOp::PowInt(_) => "pow",
            JetOp::Sin => "sin",
            JetOp::Cos => "cos",
            JetOp::Exp => "exp",
            JetOp::Log => "log",
            JetOp::Neg => "neg",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            JetOp::Add | JetOp::Sub | JetOp::Mul | JetOp::Div => 2,
            _ => 1,
        }
    }
}

/// Jet of the coordinate function `x_index` at `point`.
pub fn jet_lift_var(index: usize, point: &[f64]) -> Result<Jet2> {
    let n = point.len();
    if index >= n {
        return Err(Error::IndexOutOfRange { index, dim: n });
    }
    let mut grad = DVector::zeros(n);
    grad[index] = 1.0;
    Ok(Jet2 {
        value: point[index],
        grad,
        hess: DMatrix::zeros(n, n),
    })
}

/// Applies `op` to `args` with the order-2 chain rule.
pub fn jet_combine(op: JetOp, args: &[Jet2]) -> Result<Jet2> {
    if args.len() != op.arity() {
        return Err(Error::Arity {
            op: op.name(),
            expected: op.arity(),
            found: args.len(),
        });
    }
    if args.len() == 2 && args[0].dim() != args[1].dim() {
        return Err(Error::DimensionMismatch {
            context: "jet_combine",
            expected: args[0].dim(),
            found: args[1].dim(),
        });
    }
    let a = &args[0];
    match op {
        JetOp::Add => Ok(a.add(&args[1])),
        JetOp::Sub => Ok(a.sub(&args[1])),
        JetOp::Mul => Ok(a.mul(&args[1])),
        JetOp::Div => a.div(&args[1]),
        JetOp::PowInt(k) => a.powi(k),
        JetOp::Sin => Ok(a.sin()),
        JetOp::Cos => Ok(a.cos()),
        JetOp::Exp => Ok(a.exp()),
        JetOp::Log => a.ln(),
        JetOp::Neg => Ok(a.neg()),
    }
}

fn domain(kind: DomainKind, what: &str) -> Error {
    Error::Domain {
        kind,
        expr: what.to_string(),
    }
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            grad: DVector::zeros(dim),
            hess: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// Builds a Hessian from an entry function evaluated on the upper
    /// triangle only.
    fn symmetric(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in j..n {
                let v = entry(j, k);
                h[(j, k)] = v;
                h[(k, j)] = v;
            }
        }
        h
    }

    /// `g ∘ self` for a scalar function with `g(a) = value`, `g'(a) = d1`,
    /// `g''(a) = d2`.
    fn compose(&self, value: f64, d1: f64, d2: f64) -> Self {
        let n = self.dim();
        let g = &self.grad;
        Self {
            value,
            grad: g * d1,
            hess: Self::symmetric(n, |j, k| d1 * self.hess[(j, k)] + d2 * g[j] * g[k]),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.dim();
        Self {
            value: self.value + other.value,
            grad: &self.grad + &other.grad,
            hess: Self::symmetric(n, |j, k| self.hess[(j, k)] + other.hess[(j, k)]),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.dim();
        Self {
            value: self.value - other.value,
            grad: &self.grad - &other.grad,
            hess: Self::symmetric(n, |j, k| self.hess[(j, k)] - other.hess[(j, k)]),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            value: -self.value,
            grad: -&self.grad,
            hess: -&self.hess,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            value: self.value * s,
            grad: &self.grad * s,
            hess: &self.hess * s,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim();
        let (f, g) = (self, other);
        Self {
            value: f.value * g.value,
            grad: &g.grad * f.value + &f.grad * g.value,
            hess: Self::symmetric(n, |j, k| {
                f.value * g.hess[(j, k)]
                    + g.value * f.hess[(j, k)]
                    + f.grad[j] * g.grad[k]
                    + g.grad[j] * f.grad[k]
            }),
        }
    }

    /// Quotient rule written against `q = f/g` so the value is the plain
    /// floating-point quotient.
    pub fn div(&self, other: &Self) -> Result<Self> {
        let (f, g) = (self, other);
        if g.value == 0.0 {
            return Err(domain(DomainKind::DivisionByZero, "div"));
        }
        let n = f.dim();
        let q = f.value / g.value;
        let dq: DVector<f64> = (&f.grad - &g.grad * q) / g.value;
        let hess = Self::symmetric(n, |j, k| {
            (f.hess[(j, k)] - q * g.hess[(j, k)] - g.grad[j] * dq[k] - dq[j] * g.grad[k]) / g.value
        });
        Ok(Self {
            value: q,
            grad: dq,
            hess,
        })
    }

    pub fn powi(&self, k: i32) -> Result<Self> {
        let a = self.value;
        if k == 0 {
            return Ok(Self::constant(1.0, self.dim()));
        }
        if k < 0 && a == 0.0 {
            return Err(domain(DomainKind::ZeroToNegativePower, "pow"));
        }
        let kf = k as f64;
        let d1 = kf * a.powi(k - 1);
        let d2 = if k == 1 {
            0.0
        } else {
            kf * (kf - 1.0) * a.powi(k - 2)
        };
        Ok(self.compose(a.powi(k), d1, d2))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn ln(&self) -> Result<Self> {
        let a = self.value;
        if a <= 0.0 {
            return Err(domain(DomainKind::LogNonPositive, "log"));
        }
        Ok(self.compose(a.ln(), 1.0 / a, -1.0 / (a * a)))
    }
}

/// Central-difference Jacobian of a vector-valued chart function:
/// entry `(i, j) = (f_i(p + h e_j) - f_i(p - h e_j)) / 2h`, where `2h` is
/// taken as the floating-point distance between the two stencil points.
pub fn fd_jacobian<F>(f: F, p: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let n = p.len();
    let h = cfg.fd_step;
    let mut cols: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(n);
    let mut x = p.to_vec();
    for j in 0..n {
        let (hi, lo) = (p[j] + h, p[j] - h);
        x[j] = hi;
        let plus = f(&x)?;
        x[j] = lo;
        let minus = f(&x)?;
        x[j] = p[j];
        if plus.len() != minus.len() {
            return Err(Error::DimensionMismatch {
                context: "fd_jacobian",
                expected: plus.len(),
                found: minus.len(),
            });
        }
        // realized stencil width, so rounding of p ± h does not leak into
        // the quotient
        cols.push((plus, minus, hi - lo));
    }
    let m = cols.first().map_or(0, |c| c.0.len());
    let mut jac = DMatrix::zeros(m, n);
    for (j, (plus, minus, width)) in cols.iter().enumerate() {
        if plus.len() != m {
            return Err(Error::DimensionMismatch {
                context: "fd_jacobian",
                expected: m,
                found: plus.len(),
            });
        }
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / width;
        }
    }
    Ok(jac)
}

/// Central second differences of a scalar chart function on the four-point
/// stencil `p ± h e_j ± h e_k`.
pub fn fd_hessian<F>(f: F, p: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    let n = p.len();
    let h = cfg.fd_step_second;
    let mut out = DMatrix::zeros(n, n);
    let mut x = p.to_vec();
    let mut at = |dj: f64, dk: f64, j: usize, k: usize| -> Result<f64> {
        x.copy_from_slice(p);
        x[j] += dj;
        x[k] += dk;
        f(&x)
    };
    for j in 0..n {
        for k in j..n {
            let v = (at(h, h, j, k)? - at(h, -h, j, k)? - at(-h, h, j, k)? + at(-h, -h, j, k)?)
                / (4.0 * h * h);
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(i: usize, p: &[f64]) -> Jet2 {
        jet_lift_var(i, p).unwrap()
    }

    #[test]
    fn lift_var_is_coordinate_function() {
        let p = [3.0, 5.0];
        let x = var(0, &p);
        assert_eq!(x.value, 3.0);
        assert_eq!(x.grad.as_slice(), &[1.0, 0.0]);
        assert!(x.hess.iter().all(|&h| h == 0.0));
        let y = var(1, &p);
        assert_eq!(y.value, 5.0);
        assert_eq!(y.grad.as_slice(), &[0.0, 1.0]);
        assert!(matches!(
            jet_lift_var(2, &p),
            Err(Error::IndexOutOfRange { index: 2, dim: 2 })
        ));
    }

    #[test]
    fn product_of_coordinates() {
        let p = [2.0, 3.0];
        let xy = jet_combine(JetOp::Mul, &[var(0, &p), var(1, &p)]).unwrap();
        assert_eq!(xy.value, 6.0);
        assert_eq!(xy.grad.as_slice(), &[3.0, 2.0]);
        assert_eq!(
            xy.hess,
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
    }

    #[test]
    fn sin_at_zero() {
        let p = [0.0, 4.0];
        let s = jet_combine(JetOp::Sin, &[var(0, &p)]).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.grad.as_slice(), &[1.0, 0.0]);
        assert!(s.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn division_by_zero_jet() {
        let p = [0.0];
        let one = Jet2::constant(1.0, 1);
        let err = jet_combine(JetOp::Div, &[one, var(0, &p)]).unwrap_err();
        assert!(matches!(
            err,
            Error::Domain {
                kind: DomainKind::DivisionByZero,
                ..
            }
        ));
    }

    #[test]
    fn log_domain_and_arity() {
        let p = [-1.0];
        assert!(jet_combine(JetOp::Log, &[var(0, &p)]).is_err());
        assert!(matches!(
            jet_combine(JetOp::Add, &[var(0, &p)]),
            Err(Error::Arity { .. })
        ));
    }

    #[test]
    fn cube_derivatives() {
        let p = [2.0];
        let c = var(0, &p).powi(3).unwrap();
        assert_eq!(c.value, 8.0);
        assert_eq!(c.grad[0], 12.0);
        assert_eq!(c.hess[(0, 0)], 12.0);
    }

    #[test]
    fn quotient_hessian_matches_second_differences() {
        // f(x, y) = (x*y + 1) / (x^2 + 2)
        let p = [0.7, -1.3];
        let x = var(0, &p);
        let y = var(1, &p);
        let num = x.mul(&y).add(&Jet2::constant(1.0, 2));
        let den = x.powi(2).unwrap().add(&Jet2::constant(2.0, 2));
        let q = num.div(&den).unwrap();
        let f = |z: &[f64]| Ok((z[0] * z[1] + 1.0) / (z[0] * z[0] + 2.0));
        let h = fd_hessian(f, &p, &DiffConfig::default()).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert!((h[(j, k)] - q.hess[(j, k)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn fd_jacobian_identity_is_exact() {
        let jac = fd_jacobian(|z| Ok(z.to_vec()), &[0.3, -2.0], &DiffConfig::default()).unwrap();
        assert!((jac - DMatrix::identity(2, 2)).amax() <= 1e-12);
    }

    #[test]
    fn fd_jacobian_quadratic_map() {
        // (x^2, xy) at (1, 1): hand derivative [[2, 0], [1, 1]]
        let cfg = DiffConfig::new(1e-5, 1e-4).unwrap();
        let jac = fd_jacobian(|z| Ok(vec![z[0] * z[0], z[0] * z[1]]), &[1.0, 1.0], &cfg).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        assert!((jac - want).amax() <= 1e-8);
    }

    #[test]
    fn fd_jacobian_reports_pole() {
        let f = |z: &[f64]| {
            let d = z[0] - 1e-5;
            if d == 0.0 {
                Err(domain(DomainKind::DivisionByZero, "1/(x - 1e-5)"))
            } else {
                Ok(vec![1.0 / d])
            }
        };
        assert!(fd_jacobian(f, &[0.0], &DiffConfig::default()).is_err());
    }

    #[test]
    fn diff_config_bounds() {
        assert!(DiffConfig::new(1e-9, 1e-4).is_err());
        assert!(DiffConfig::new(1e-5, 0.1).is_err());
        assert!(DiffConfig::new(1e-8, 1e-2).is_ok());
    }

    #[test]
    fn quadratic_polynomials_are_exact() {
        // 3x^2 - 2xy + 5y - 7 at (1.5, -0.25)
        let p = [1.5, -0.25];
        let x = var(0, &p);
        let y = var(1, &p);
        let c = |v| Jet2::constant(v, 2);
        let f = c(3.0)
            .mul(&x.powi(2).unwrap())
            .sub(&c(2.0).mul(&x).mul(&y))
            .add(&c(5.0).mul(&y))
            .sub(&c(7.0));
        assert_eq!(
            f.grad.as_slice(),
            &[6.0 * 1.5 - 2.0 * -0.25, -2.0 * 1.5 + 5.0]
        );
        assert_eq!(
            f.hess,
            DMatrix::from_row_slice(2, 2, &[6.0, -2.0, -2.0, 0.0])
        );
    }
}
