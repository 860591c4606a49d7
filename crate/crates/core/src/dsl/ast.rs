use std::fmt;

use super::Coords;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub const ALL: [Func; 4] = [Func::Sin, Func::Cos, Func::Exp, Func::Log];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Scalar expression over chart coordinates. Variables are stored as
/// coordinate indices; names live in [`Coords`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn one() -> Self {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    // Folding constructors. They drop `0 * e` even when `e` would hit a pole,
    // which is fine for expressions built by differentiation.

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return Expr::zero();
        }
        if b.is_one() {
            return a;
        }
        Expr::Binary(BinOp::Div, Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        match (k, a.as_const()) {
            (0, _) => Expr::one(),
            (1, _) => a,
            (_, Some(c)) if c != 0.0 || k > 0 => Expr::Const(c.powi(k)),
            _ => Expr::Pow(Box::new(a), k),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Sum of terms, folding zeros.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Symbolic partial derivative with respect to coordinate `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.derivative(var)),
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.derivative(var), b.derivative(var));
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => {
                        Expr::add(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db))
                    }
                    BinOp::Div => {
                        if db.is_zero() {
                            Expr::div(da, (**b).clone())
                        } else {
                            Expr::div(
                                Expr::sub(
                                    Expr::mul(da, (**b).clone()),
                                    Expr::mul((**a).clone(), db),
                                ),
                                Expr::pow((**b).clone(), 2),
                            )
                        }
                    }
                }
            }
            Expr::Pow(a, k) => {
                let da = a.derivative(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = Expr::mul(Expr::Const(*k as f64), Expr::pow((**a).clone(), k - 1));
                Expr::mul(outer, da)
            }
            Expr::Call(f, a) => {
                let da = a.derivative(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                let inner = (**a).clone();
                match f {
                    Func::Sin => Expr::mul(Expr::call(Func::Cos, inner), da),
                    Func::Cos => Expr::neg(Expr::mul(Expr::call(Func::Sin, inner), da)),
                    Func::Exp => Expr::mul(Expr::call(Func::Exp, inner), da),
                    Func::Log => Expr::div(da, inner),
                }
            }
        }
    }

    /// Replaces every variable with `f(index)`.
    pub fn map_vars(&self, f: &impl Fn(usize) -> Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => f(*i),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_vars(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.map_vars(f)), *k),
            Expr::Call(func, a) => Expr::Call(*func, Box::new(a.map_vars(f))),
        }
    }

    /// Collects the coordinate indices that occur in the expression.
    pub fn free_vars(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.free_vars(out),
            Expr::Binary(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        let mut v = Vec::new();
        self.free_vars(&mut v);
        v.into_iter().max()
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => PREC_ATOM,
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Pow(..) => PREC_POW,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    /// Renders the expression in the DSL grammar using `coords` for names.
    /// The output parses back to an expression with identical evaluation.
    pub fn display<'a>(&'a self, coords: &'a Coords) -> Display<'a> {
        Display { expr: self, coords }
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    coords: &'a Coords,
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    let mag = c.abs();
    let body = if mag != 0.0 && !(1e-6..1e16).contains(&mag) {
        format!("{mag:e}")
    } else {
        format!("{mag}")
    };
    if c.is_sign_negative() {
        write!(f, "(-{body})")
    } else {
        f.write_str(&body)
    }
}

impl Display<'_> {
    fn child<'b>(&'b self, e: &'b Expr) -> Display<'b> {
        Display {
            expr: e,
            coords: self.coords,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({})", self.child(e))
        } else {
            write!(f, "{}", self.child(e))
        }
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Const(c) => write_const(f, *c),
            Expr::Var(i) => match self.coords.name(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "#{i}"),
            },
            Expr::Neg(a) => {
                f.write_str("-")?;
                // `-2` would read back as a constant, not a negation
                let bare_const = matches!(**a, Expr::Const(c) if !c.is_sign_negative());
                self.write_operand(f, a, bare_const || a.precedence() < PREC_NEG)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                self.write_operand(f, a, a.precedence() < p)?;
                f.write_str(op.symbol())?;
                // fp addition and multiplication are not associative, so a
                // same-precedence right operand always keeps its parentheses
                self.write_operand(f, b, b.precedence() <= p)
            }
            Expr::Pow(a, k) => {
                self.write_operand(f, a, a.precedence() < PREC_ATOM)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), self.child(a)),
        }
    }
}
