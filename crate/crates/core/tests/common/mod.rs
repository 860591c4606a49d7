#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use nijenhuis::dsl::{BinOp, Coords, Expr, Func};
use nijenhuis::geometry::{NOperatorField, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn coords(n: usize) -> Arc<Coords> {
    Coords::numbered("x", n).unwrap()
}

fn coef(rng: &mut ChaCha8Rng) -> f64 {
    (rng.random_range(-2.0..2.0_f64) * 8.0).round() / 8.0
}

/// Random polynomial of total degree at most `degree` in `n` variables.
pub fn poly(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> Expr {
    let mut terms = vec![Expr::Const(coef(rng))];
    if degree >= 1 {
        for i in 0..n {
            if rng.random_bool(0.6) {
                terms.push(Expr::mul(Expr::Const(coef(rng)), Expr::Var(i)));
            }
        }
    }
    if degree >= 2 {
        for i in 0..n {
            for j in i..n {
                if rng.random_bool(0.35) {
                    terms.push(Expr::mul(
                        Expr::Const(coef(rng)),
                        Expr::mul(Expr::Var(i), Expr::Var(j)),
                    ));
                }
            }
        }
    }
    Expr::sum(terms)
}

pub fn poly_operator(rng: &mut ChaCha8Rng, c: &Arc<Coords>, degree: usize) -> NOperatorField {
    let n = c.dim();
    let entries = (0..n)
        .map(|_| (0..n).map(|_| poly(rng, n, degree)).collect())
        .collect();
    NOperatorField::new(c.clone(), entries).unwrap()
}

pub fn poly_field(rng: &mut ChaCha8Rng, c: &Arc<Coords>, degree: usize) -> VectorField {
    let n = c.dim();
    VectorField::new(c.clone(), (0..n).map(|_| poly(rng, n, degree)).collect()).unwrap()
}

pub fn point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// Random expression over the whole DSL, built so that it is defined and of
/// moderate size on `[-1, 1]^n`.
pub fn smooth_expr(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.75) {
            Expr::Var(rng.random_range(0..n))
        } else {
            Expr::Const(coef(rng))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| smooth_expr(rng, n, depth - 1);
    let one = Expr::Const(1.0);
    match rng.random_range(0..12) {
        0 => Expr::Binary(BinOp::Add, Box::new(sub(rng)), Box::new(sub(rng))),
        1 => Expr::Binary(BinOp::Sub, Box::new(sub(rng)), Box::new(sub(rng))),
        2 => Expr::Binary(BinOp::Mul, Box::new(sub(rng)), Box::new(sub(rng))),
        3 => {
            let den = Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Const(2.0)),
                Box::new(Expr::Call(Func::Cos, Box::new(sub(rng)))),
            );
            Expr::Binary(BinOp::Div, Box::new(sub(rng)), Box::new(den))
        }
        4 => Expr::Pow(Box::new(sub(rng)), rng.random_range(2..=3)),
        5 => {
            let base = Expr::Binary(
                BinOp::Add,
                Box::new(one),
                Box::new(Expr::Pow(Box::new(sub(rng)), 2)),
            );
            Expr::Pow(Box::new(base), -rng.random_range(1..=2))
        }
        6 => Expr::Call(Func::Sin, Box::new(sub(rng))),
        7 => Expr::Call(Func::Cos, Box::new(sub(rng))),
        8 => Expr::Call(
            Func::Exp,
            Box::new(Expr::Call(Func::Sin, Box::new(sub(rng)))),
        ),
        9 => {
            let arg = Expr::Binary(
                BinOp::Add,
                Box::new(one),
                Box::new(Expr::Pow(Box::new(sub(rng)), 2)),
            );
            Expr::Call(Func::Log, Box::new(arg))
        }
        10 => Expr::Neg(Box::new(sub(rng))),
        _ => Expr::Binary(
            BinOp::Mul,
            Box::new(Expr::Const(coef(rng))),
            Box::new(sub(rng)),
        ),
    }
}

/// Node kinds present in `e`, as short tags.
pub fn op_tags(e: &Expr, out: &mut std::collections::BTreeSet<&'static str>) {
    match e {
        Expr::Const(_) => {}
        Expr::Var(_) => {}
        Expr::Neg(a) => {
            out.insert("neg");
            op_tags(a, out);
        }
        Expr::Binary(op, a, b) => {
            out.insert(match op {
                BinOp::Add => "add",
                BinOp::Sub => "sub",
                BinOp::Mul => "mul",
                BinOp::Div => "div",
            });
            op_tags(a, out);
            op_tags(b, out);
        }
        Expr::Pow(a, k) => {
            out.insert(if *k < 0 { "pow_neg" } else { "pow" });
            op_tags(a, out);
        }
        Expr::Call(f, a) => {
            out.insert(f.name());
            op_tags(a, out);
        }
    }
}

pub fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems")
}

/// `(file, subcommand, extra arguments, expected exit code)`.
pub const GOLDEN: &[(&str, &str, &[&str], i32)] = &[
    ("flat_complex", "verify-all", &[], 0),
    ("flat_complex", "torsion", &[], 0),
    ("flat_complex", "torsion", &["--operator", "K"], 2),
    ("flat_complex", "project", &[], 2),
    ("flat_complex", "liealg", &[], 2),
    ("counterexample_x_shear", "verify-all", &[], 1),
    ("counterexample_x_shear", "torsion", &[], 1),
    ("counterexample_x_shear", "lift", &[], 0),
    ("diagonal_nijenhuis", "verify-all", &[], 0),
    (
        "diagonal_nijenhuis",
        "lift",
        &["--seed", "5", "--samples", "12"],
        0,
    ),
    ("diagonal_3d", "verify-all", &[], 0),
    ("conjugated_diagonal", "verify-all", &[], 0),
    ("projectable_block", "project", &[], 0),
    ("projectable_block", "verify-all", &[], 1),
    ("project_fiber_dependent", "project", &[], 1),
    ("lifted_diagonal", "project", &[], 0),
    ("lifted_diagonal", "verify-all", &[], 0),
    ("complex_fibered", "project", &[], 0),
    ("complex_fibered", "verify-all", &[], 1),
    ("shear_lift", "lift", &[], 0),
    ("shear_lift", "torsion", &[], 1),
    ("declared_product_wrong", "torsion", &[], 1),
    ("so3_identity", "liealg", &[], 0),
    ("so3_diag", "liealg", &[], 1),
    ("sphere_homogeneous", "liealg", &[], 0),
    ("sphere_homogeneous", "verify-all", &[], 0),
    ("heisenberg_complex_fail", "liealg", &[], 1),
    ("malformed_constants", "liealg", &[], 2),
    ("log_domain_error", "torsion", &[], 2),
    ("bad_expression", "verify-all", &[], 2),
    ("empty", "verify-all", &[], 2),
    ("does_not_exist", "verify-all", &[], 2),
];

pub struct Run {
    pub code: i32,
    pub stdout: String,
}

pub fn run_cli(file: &str, sub: &str, extra: &[&str]) -> Run {
    let path = problems_dir().join(format!("{file}.toml"));
    let out = Command::new(env!("CARGO_BIN_EXE_nijenhuis"))
        .arg(sub)
        .arg("--file")
        .arg(path)
        .args(extra)
        .args(["--format", "machine"])
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
    }
}

/// Report body up to the wall-time key.
pub fn report_body(stdout: &str) -> &str {
    stdout.split(",\"wall_time_ms\"").next().unwrap_or(stdout)
}
