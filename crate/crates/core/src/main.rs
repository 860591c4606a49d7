use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nijenhuis::cli::{self, Command, Overrides};

/// Check Nijenhuis operators, tangent lifts, projections and Lie-algebraic
/// criteria described in a problem file.
#[derive(Parser)]
#[command(name = "nijenhuis", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Torsion of one operator on the sample set.
    Torsion(Common),
    /// Tangent-lift identities and the lifted operator.
    Lift(Common),
    /// Projectability along the declared fibration.
    Project(Common),
    /// Criteria for the declared Lie algebra.
    Liealg(Common),
    /// Every check that applies to the problem.
    VerifyAll(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Args)]
struct Common {
    /// Problem file (TOML).
    #[arg(long)]
    file: PathBuf,
    /// Operator name; optional when the file declares exactly one.
    #[arg(long)]
    operator: Option<String>,
    /// Override tolerances.torsion_tol.
    #[arg(long)]
    tol: Option<f64>,
    /// Override sampler.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override sampler.count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::Torsion(a) => (Command::Torsion, a),
        Sub::Lift(a) => (Command::Lift, a),
        Sub::Project(a) => (Command::Project, a),
        Sub::Liealg(a) => (Command::Liealg, a),
        Sub::VerifyAll(a) => (Command::VerifyAll, a),
    };
    let overrides = Overrides {
        tol: args.tol,
        seed: args.seed,
        samples: args.samples,
    };
    let report = cli::execute(cmd, &args.file, args.operator.as_deref(), &overrides);
    match args.format {
        Format::Machine => println!("{}", report.to_json()),
        Format::Human => {
            print!("{}", report.to_human());
        }
    }
    ExitCode::from(report.exit_code as u8)
}
