//! Scenario runner for chain-coupling reconstruction studies.
//!
//! The library side of the `chainscope` binary: configuration resolution
//! (defaults, config file, command-line overrides), the reconstruction
//! distance metric, five named studies over the reconstruction engine in
//! `chainscope-core`, and CSV/SVG report emission with full provenance.
//!
//! Every run is deterministic for a fixed base seed: per-chain and
//! per-sample RNG streams are derived with the engine's seed mixer, and
//! reductions run in a fixed order even when samples are computed in
//! parallel. Re-running a scenario with identical configuration produces
//! byte-identical CSV files.

pub mod config;
pub mod distance;
pub mod plot;
pub mod report;
pub mod scenario;

pub use config::{ConfigFile, ExperimentConfig, Overrides, Scenario};
pub use distance::reconstruction_distance;
pub use report::{BondRow, ConditionTables, ScenarioReport, SpectrumRow, SummaryRow};
pub use scenario::run_scenario;

use std::path::PathBuf;

/// Errors surfaced to the command line, partitioned by exit code:
/// configuration problems exit 1, numerical failures exit 2, I/O exits 3.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<chainscope_core::Error> for CliError {
    fn from(err: chainscope_core::Error) -> Self {
        CliError::Numerical(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
