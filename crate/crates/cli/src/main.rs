use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ctrfn::config::TOL_ENV;
use ctrfn::{execute_file, Command, Status};

/// Characteristic functions, canonical splittings and coincidence checks
/// for windowed shift operators.
#[derive(Parser, Debug)]
#[command(name = "ctrfn", version)]
struct Cli {
    /// What to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_tol = std::env::var(TOL_ENV).ok();
    match execute_file(
        cli.command,
        &cli.config,
        cli.out.as_deref(),
        cli.seed,
        env_tol.as_deref(),
    ) {
        Ok(report) => {
            if let Some(e) = &report.error {
                eprintln!("ctrfn: {e}");
            } else if report.status == Status::Inconclusive {
                for w in &report.warnings {
                    eprintln!("ctrfn: warning: {w}");
                }
            }
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("ctrfn: cannot write report: {e}");
            ExitCode::from(1)
        }
    }
}
