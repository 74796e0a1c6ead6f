use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use conoshock::workbench::{parse_case, run_subcommand, FailureReport, Status, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Polar,
    Background,
    Linsolve,
    Solve,
    Sweep,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Polar => Subcommand::Polar,
            Command::Background => Subcommand::Background,
            Command::Linsolve => Subcommand::Linsolve,
            Command::Solve => Subcommand::Solve,
            Command::Sweep => Subcommand::Sweep,
        }
    }
}

/// Transonic conical shock workbench.
///
/// Set CONOSHOCK_THREADS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "conoshock", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Command,
    /// Case file.
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory; defaults to `[output] dir` of the case, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub = Subcommand::from(cli.subcommand);
    let cfg = match parse_case(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            let report = FailureReport {
                subcommand: sub.name().into(),
                status: Status::Error,
                kind: e.kind().into(),
                message: e.to_string(),
            };
            eprintln!("{}: {e}", cli.config.display());
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            return ExitCode::from(2);
        }
    };
    let dir = cli.out.or_else(|| cfg.output_dir().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run_subcommand(sub, &cfg);
    if let Err(e) = outcome.artifacts.write_to(&dir) {
        eprintln!("cannot write artifacts to {}: {e}", dir.display());
        return ExitCode::from(2);
    }
    if let Some(failure) = outcome.artifacts.text("failure.json") {
        eprint!("{failure}");
    }
    eprintln!("{}: {:?}, artifacts in {}", sub.name(), outcome.status, dir.display());
    ExitCode::from(outcome.exit_code() as u8)
}
