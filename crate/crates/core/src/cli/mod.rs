//! Command layer behind the `nijenhuis` binary: problem files in, reports out.
//!
//! Exit codes: 0 when every verdict holds, 1 when a verdict fails, 2 on any
//! input or evaluation error.

pub mod commands;
pub mod problem;
pub mod report;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use crate::error::Result;
pub use problem::{Overrides, Problem};
pub use report::{Check, Report, Role, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Torsion,
    Lift,
    Project,
    Liealg,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Torsion => "torsion",
            Command::Lift => "lift",
            Command::Project => "project",
            Command::Liealg => "liealg",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Loads `file`, runs `cmd` and returns the finished report. Never panics:
/// an internal panic is reported as an error.
pub fn execute(cmd: Command, file: &Path, operator: Option<&str>, overrides: &Overrides) -> Report {
    let start = Instant::now();
    let mut report = Report::new(cmd.name(), &file.display().to_string());
    match Problem::load(file, overrides) {
        Err(e) => report.errors.push(e.to_string()),
        Ok(p) => {
            report.problem = Some(p.name.clone());
            report.settings = Some(p.settings.clone());
            let outcome = catch_unwind(AssertUnwindSafe(|| run(cmd, &p, operator, &mut report)));
            if outcome.is_err() {
                report
                    .errors
                    .push("internal error while running checks".into());
            }
        }
    }
    report.finish(start.elapsed().as_secs_f64() * 1e3);
    report
}

fn collect(report: &mut Report, context: String, r: Result<Vec<Check>>) {
    match r {
        Ok(checks) => report.checks.extend(checks),
        Err(e) if context.is_empty() => report.errors.push(e.to_string()),
        Err(e) => report.errors.push(format!("{context}: {e}")),
    }
}

fn run(cmd: Command, p: &Problem, operator: Option<&str>, report: &mut Report) {
    let single =
        |report: &mut Report, f: fn(&Problem, &str, &problem::Operator) -> Result<Vec<Check>>| {
            let r = p.operator(operator).and_then(|(name, op)| f(p, name, op));
            collect(report, String::new(), r);
        };
    match cmd {
        Command::Torsion => single(report, commands::cmd_torsion),
        Command::Lift => single(report, commands::cmd_lift),
        Command::Project => single(report, commands::cmd_project),
        Command::Liealg => collect(report, String::new(), commands::cmd_liealg(p)),
        Command::VerifyAll => {
            let names: Vec<&String> = match operator {
                Some(o) => match p.operator(Some(o)) {
                    Ok(_) => p.operators.keys().filter(|k| k.as_str() == o).collect(),
                    Err(e) => {
                        report.errors.push(e.to_string());
                        return;
                    }
                },
                None => p.operators.keys().collect(),
            };
            if names.is_empty() && p.algebra.is_none() {
                report
                    .errors
                    .push("problem file: nothing to verify (no operators and no algebra)".into());
                return;
            }
            for name in names {
                let op = &p.operators[name];
                collect(
                    report,
                    format!("torsion {name}"),
                    commands::cmd_torsion(p, name, op),
                );
                collect(
                    report,
                    format!("lift {name}"),
                    commands::cmd_lift(p, name, op),
                );
                if p.fibration
                    .as_ref()
                    .is_some_and(|f| f.operators.contains(name))
                {
                    collect(
                        report,
                        format!("project {name}"),
                        commands::cmd_project(p, name, op),
                    );
                }
            }
            if p.algebra.is_some() {
                collect(report, "liealg".into(), commands::cmd_liealg(p));
            }
        }
    }
}
