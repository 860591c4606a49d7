//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | atom ("^" integer)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `integer` may carry a leading minus sign. Functions: `sin`, `cos`, `exp`,
//! `log`.

use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, Expr, Func};
use super::Coords;

/// Maximum nesting depth of a parsed tree.
pub const MAX_DEPTH: usize = 256;

/// Byte range `start..end` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken {
        found: String,
        expected: &'static str,
    },
    UnexpectedEnd {
        expected: &'static str,
    },
    UnknownIdentifier(String),
    UnknownFunction(String),
    NonIntegerExponent,
    TooDeep,
    InvalidNumber(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "unexpected `{found}`, expected {expected}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected {expected}")
            }
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::UnknownFunction(name) => write!(f, "unknown function `{name}`"),
            ParseErrorKind::NonIntegerExponent => {
                f.write_str("exponent must be an integer literal")
            }
            ParseErrorKind::TooDeep => write!(f, "expression nested deeper than {MAX_DEPTH}"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at {span} in `{source_text}`")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num { value, .. } => write!(f, "{value}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Slash => f.write_str("/"),
            Tok::Caret => f.write_str("^"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, (ParseErrorKind, SourceSpan)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            i += 1;
            out.push((tok, SourceSpan::new(start, i)));
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut integer = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integer = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integer = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let value: f64 = s.parse().map_err(|_| {
                (
                    ParseErrorKind::InvalidNumber(s.to_string()),
                    SourceSpan::new(start, i),
                )
            })?;
            out.push((Tok::Num { value, integer }, SourceSpan::new(start, i)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((
                Tok::Ident(text[start..i].to_string()),
                SourceSpan::new(start, i),
            ));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err((
            ParseErrorKind::UnexpectedChar(ch),
            SourceSpan::new(start, start + ch.len_utf8()),
        ));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    coords: &'a Coords,
    len: usize,
    nesting: usize,
}

type PResult<T> = Result<T, (ParseErrorKind, SourceSpan)>;

/// A subtree together with its depth, so the depth bound is enforced while
/// building instead of by recursing over the finished tree.
struct Node {
    expr: Expr,
    depth: usize,
}

impl Node {
    fn leaf(expr: Expr) -> Self {
        Node { expr, depth: 1 }
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span_here(&self) -> SourceSpan {
        self.toks
            .get(self.pos)
            .map(|(_, s)| *s)
            .unwrap_or(SourceSpan::new(self.len, self.len))
    }

    fn bump(&mut self) -> Option<(Tok, SourceSpan)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unexpected(&self, expected: &'static str) -> (ParseErrorKind, SourceSpan) {
        match self.toks.get(self.pos) {
            Some((t, s)) => (
                ParseErrorKind::UnexpectedToken {
                    found: t.to_string(),
                    expected,
                },
                *s,
            ),
            None => (ParseErrorKind::UnexpectedEnd { expected }, self.span_here()),
        }
    }

    fn join(&self, a: Node, b: Node, op: BinOp, span: SourceSpan) -> PResult<Node> {
        let depth = 1 + a.depth.max(b.depth);
        if depth > MAX_DEPTH {
            return Err((ParseErrorKind::TooDeep, span));
        }
        Ok(Node {
            expr: Expr::Binary(op, Box::new(a.expr), Box::new(b.expr)),
            depth,
        })
    }

    fn wrap(
        &self,
        inner: Node,
        f: impl FnOnce(Box<Expr>) -> Expr,
        span: SourceSpan,
    ) -> PResult<Node> {
        if inner.depth + 1 > MAX_DEPTH {
            return Err((ParseErrorKind::TooDeep, span));
        }
        Ok(Node {
            expr: f(Box::new(inner.expr)),
            depth: inner.depth + 1,
        })
    }

    fn enter(&mut self) -> PResult<()> {
        self.nesting += 1;
        if self.nesting > MAX_DEPTH {
            return Err((ParseErrorKind::TooDeep, self.span_here()));
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Node> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            let span = self.span_here();
            self.pos += 1;
            let rhs = self.term()?;
            lhs = self.join(lhs, rhs, op, span)?;
        }
        self.nesting -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Node> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            let span = self.span_here();
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = self.join(lhs, rhs, op, span)?;
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<Node> {
        if let Some(Tok::Minus) = self.peek() {
            let span = self.span_here();
            self.pos += 1;
            // `-2` is the constant -2, matching how negative constants print
            if let (Some((Tok::Num { value, .. }, _)), next) =
                (self.toks.get(self.pos), self.toks.get(self.pos + 1))
            {
                if !matches!(next, Some((Tok::Caret, _))) {
                    let value = -*value;
                    self.pos += 1;
                    return Ok(Node::leaf(Expr::Const(value)));
                }
            }
            self.enter()?;
            let inner = self.factor()?;
            self.nesting -= 1;
            return self.wrap(inner, Expr::Neg, span);
        }
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            let caret = self.span_here();
            self.pos += 1;
            let negative = if let Some(Tok::Minus) = self.peek() {
                self.pos += 1;
                true
            } else {
                false
            };
            let k = match self.bump() {
                Some((
                    Tok::Num {
                        value,
                        integer: true,
                    },
                    span,
                )) => {
                    let signed = if negative { -value } else { value };
                    if signed.abs() > i32::MAX as f64 {
                        return Err((ParseErrorKind::NonIntegerExponent, span));
                    }
                    signed as i32
                }
                Some((_, span)) => return Err((ParseErrorKind::NonIntegerExponent, span)),
                None => {
                    return Err((
                        ParseErrorKind::UnexpectedEnd {
                            expected: "integer exponent",
                        },
                        SourceSpan::new(self.len, self.len),
                    ))
                }
            };
            return self.wrap(base, |b| Expr::Pow(b, k), caret);
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Node> {
        let here = self.span_here();
        match self.bump() {
            Some((Tok::Num { value, .. }, _)) => Ok(Node::leaf(Expr::Const(value))),
            Some((Tok::Ident(name), span)) => {
                if let Some(Tok::LParen) = self.peek() {
                    let func = Func::from_name(&name)
                        .ok_or((ParseErrorKind::UnknownFunction(name), span))?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return self.wrap(arg, |a| Expr::Call(func, a), span);
                }
                match self.coords.index_of(&name) {
                    Some(i) => Ok(Node::leaf(Expr::Var(i))),
                    None => Err((ParseErrorKind::UnknownIdentifier(name), span)),
                }
            }
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected("number, identifier or `(`"))
            }
            None => Err((
                ParseErrorKind::UnexpectedEnd {
                    expected: "number, identifier or `(`",
                },
                here,
            )),
        }
    }

    fn expect_rparen(&mut self) -> PResult<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected("`)`")),
        }
    }
}

/// Parses `text` against the declared coordinate names.
pub fn parse(text: &str, coords: &Coords) -> Result<Expr, ParseError> {
    let fail = |(kind, span): (ParseErrorKind, SourceSpan)| ParseError {
        kind,
        span,
        source_text: text.to_string(),
    };
    let toks = lex(text).map_err(fail)?;
    if toks.is_empty() {
        return Err(fail((
            ParseErrorKind::Empty,
            SourceSpan::new(0, text.len()),
        )));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        coords,
        len: text.len(),
        nesting: 0,
    };
    let node = p.expr().map_err(fail)?;
    if p.pos < p.toks.len() {
        return Err(fail(p.unexpected("operator or end of input")));
    }
    Ok(node.expr)
}
