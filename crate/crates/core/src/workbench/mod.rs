//! Case files, subcommands and artifact emission behind the `conoshock` binary.

mod artifacts;
mod commands;
pub mod config;
pub mod manufactured;

pub use artifacts::{Artifacts, Manifest, ManifestEntry, MANIFEST};
pub use commands::{
    run_subcommand, BackgroundSummary, FailureReport, Outcome, PolarReport, Status, Subcommand, SweepPoint, SweepReport,
    SweepSolve,
};
pub use config::{parse_case, parse_case_str, CaseConfig, ConeTarget, Value, SCHEMA};
