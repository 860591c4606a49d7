//! Expression language for chart-coordinate functions.
//!
//! Operators, vector fields and problem files are written as scalar
//! expressions in the declared coordinates. The same tree is evaluated either
//! in floating point or on [`Jet2`](crate::jets::Jet2)s, and can be
//! differentiated symbolically to build lifted objects.

mod ast;
mod eval;
mod parser;

use std::sync::Arc;

pub use ast::{BinOp, Display, Expr, Func};
pub use eval::{eval_jet, eval_real};
pub use parser::{parse, ParseError, ParseErrorKind, SourceSpan, MAX_DEPTH};

use crate::error::{Error, Result};
use crate::jets::{Jet2, MAX_DIM};

/// Declared coordinate names of a chart. Names are case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coords {
    names: Vec<String>,
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Coords {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Arc<Self>> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() || names.len() > MAX_DIM {
            return Err(Error::Config(format!(
                "chart dimension {} outside 1..={MAX_DIM}",
                names.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if !valid_ident(name) {
                return Err(Error::Config(format!("invalid coordinate name `{name}`")));
            }
            if Func::from_name(name).is_some() {
                return Err(Error::Config(format!(
                    "coordinate name `{name}` shadows a function"
                )));
            }
            if names[..i].contains(name) {
                return Err(Error::Config(format!("duplicate coordinate name `{name}`")));
            }
        }
        Ok(Arc::new(Self { names }))
    }

    /// `x1..xn`.
    pub fn numbered(prefix: &str, n: usize) -> Result<Arc<Self>> {
        Self::new((1..=n).map(|i| format!("{prefix}{i}")))
    }

    /// Placeholder used when rendering expressions without a chart.
    pub(crate) fn anonymous() -> Self {
        Self { names: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> Option<&str> {
        self.names.get(i).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parse(&self, text: &str) -> Result<Expr> {
        Ok(parse(text, self)?)
    }

    /// Like [`eval_real`] but checks the point length and names
    /// subexpressions in errors.
    pub fn eval_real(&self, e: &Expr, point: &[f64]) -> Result<f64> {
        crate::error::check_dim("expression evaluation", self.dim(), point.len())?;
        eval::real(e, point, Some(self))
    }

    pub fn eval_jet(&self, e: &Expr, point: &[f64]) -> Result<Jet2> {
        crate::error::check_dim("expression evaluation", self.dim(), point.len())?;
        eval::jet(e, point, Some(self))
    }
}
