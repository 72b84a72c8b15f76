use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meancurv_cli::config::Command;
use meancurv_cli::pipeline::EXIT_INVALID;
use meancurv_cli::{env_out_dir, execute, summary, Invocation};

#[derive(Parser)]
#[command(name = "meancurv", version, about = "Prescribed mean curvature solver and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $OUT_DIR, then output.dir, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path override such as mesh.h_target=0.05; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Re-verify a stored solution.csv instead of solving.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve the boundary value problem at the configured t.
    Solve(Common),
    /// Continue from t = 0 to t = 1 and track the critical points.
    Homotopy(Common),
    /// Axisymmetric solve and checks on a ball or spheroid.
    Axisym(Common),
    /// Nodal structure of the solution minus a comparison function.
    Compare(Common),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Generate the mesh and report its quality.
    MeshReport(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { 0 });
        }
    };
    let (command, common, solution) = match cli.command {
        Sub::Solve(c) => (Command::Solve, c, None),
        Sub::Homotopy(c) => (Command::Homotopy, c, None),
        Sub::Axisym(c) => (Command::Axisym, c, None),
        Sub::Compare(c) => (Command::Compare, c, None),
        Sub::Verify(v) => (Command::Verify, v.common, v.solution),
        Sub::MeshReport(c) => (Command::MeshReport, c, None),
    };
    let inv = Invocation {
        command,
        config: common.config,
        out: common.out.or_else(env_out_dir),
        overrides: common.overrides,
        solution,
    };
    match execute(&inv) {
        Ok(ex) => {
            println!("{}", summary(&ex));
            ExitCode::from(ex.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
