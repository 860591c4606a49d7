use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use super::problem::Settings;
use crate::liealg::{DATUM_TOL, STRUCTURE_TOL};

pub const REPORT_TAG: &str = "nijenhuis-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Decides the exit code.
    Verdict,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub subject: String,
    pub name: String,
    pub role: Role,
    pub holds: bool,
    /// Worst residual or norm behind the verdict.
    pub value: Option<f64>,
    pub tol: Option<f64>,
    pub witness: Option<String>,
    pub detail: Value,
}

impl Check {
    pub fn new(
        suite: &'static str,
        subject: &str,
        name: impl Into<String>,
        role: Role,
        holds: bool,
    ) -> Self {
        Self {
            suite,
            subject: subject.to_string(),
            name: name.into(),
            role,
            holds,
            value: None,
            tol: None,
            witness: None,
            detail: Value::Null,
        }
    }

    pub fn value(mut self, value: f64, tol: f64) -> Self {
        self.value = Some(value);
        self.tol = Some(tol);
        self
    }

    pub fn witness(mut self, w: Option<String>) -> Self {
        self.witness = w;
        self
    }

    pub fn detail<T: Serialize>(mut self, d: &T) -> Self {
        self.detail = serde_json::to_value(d).unwrap_or(Value::Null);
        self
    }

    fn failed(&self) -> bool {
        self.role == Role::Verdict && !self.holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

/// Tolerances fixed by the library rather than the problem file.
#[derive(Debug, Clone, Serialize)]
pub struct FixedTolerances {
    pub structure_constants: f64,
    pub homogeneous_datum: f64,
}

impl Default for FixedTolerances {
    fn default() -> Self {
        Self {
            structure_constants: STRUCTURE_TOL,
            homogeneous_datum: DATUM_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub command: String,
    pub problem: Option<String>,
    pub source: String,
    pub status: Status,
    pub exit_code: i32,
    pub settings: Option<Settings>,
    pub fixed_tolerances: FixedTolerances,
    pub checks: Vec<Check>,
    pub errors: Vec<String>,
    /// Always last, so reports can be compared byte-wise up to this key.
    pub wall_time_ms: f64,
}

impl Report {
    pub fn new(command: &str, source: &str) -> Self {
        Self {
            format: REPORT_TAG,
            command: command.to_string(),
            problem: None,
            source: source.to_string(),
            status: Status::Pass,
            exit_code: 0,
            settings: None,
            fixed_tolerances: FixedTolerances::default(),
            checks: Vec::new(),
            errors: Vec::new(),
            wall_time_ms: 0.0,
        }
    }

    /// Sets `status` and `exit_code` from the checks and errors.
    pub fn finish(&mut self, wall_time_ms: f64) {
        self.status = if !self.errors.is_empty() {
            Status::Error
        } else if self.checks.iter().any(Check::failed) {
            Status::Fail
        } else {
            Status::Pass
        };
        self.exit_code = self.status.exit_code();
        self.wall_time_ms = wall_time_ms;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self)
            .unwrap_or_else(|e| format!("{{\"format\":\"{REPORT_TAG}\",\"errors\":[\"{e}\"]}}"))
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {}  ({})",
            self.command,
            self.problem.as_deref().unwrap_or("-"),
            self.source
        );
        if let Some(s) = &self.settings {
            let _ = writeln!(
                out,
                "seed {}  samples {}  torsion_tol {:e}  fd_step {:e}",
                s.seed, s.samples, s.torsion_tol, s.fd_step
            );
        }
        for c in &self.checks {
            let tag = match (c.role, c.holds) {
                (Role::Verdict, true) => "PASS",
                (Role::Verdict, false) => "FAIL",
                (Role::Info, true) => "yes ",
                (Role::Info, false) => "no  ",
            };
            let _ = write!(out, "{tag}  {:<8} {:<10} {}", c.suite, c.subject, c.name);
            if let (Some(v), Some(t)) = (c.value, c.tol) {
                let _ = write!(out, "  value {v:.3e} (tol {t:e})");
            }
            if let Some(w) = &c.witness {
                let _ = write!(out, "  at {w}");
            }
            out.push('\n');
        }
        for e in &self.errors {
            let _ = writeln!(out, "error: {e}");
        }
        let _ = writeln!(
            out,
            "status: {} (exit {})  {:.1} ms",
            match self.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Error => "error",
            },
            self.exit_code,
            self.wall_time_ms
        );
        out
    }
}

pub fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}
