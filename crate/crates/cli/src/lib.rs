//! Experiment driver: configuration, solver runs per mesh level, and CSV/VTK
//! output.

use std::path::PathBuf;

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{Case, ExperimentConfig, Overrides};
pub use experiment::{run_experiment, ExperimentReport, LevelOutcome};
pub use output::{export_control_field, read_table_csv, write_table_csv, write_trace_csv, TableRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for I/O errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
