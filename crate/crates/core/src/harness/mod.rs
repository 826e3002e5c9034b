//! Monte-Carlo experiment harness: configuration, presets, trial scheduling,
//! aggregation, file formats and the five experiments.

pub mod config;
pub mod experiments;
pub mod io;
pub mod presets;
pub mod runner;
pub mod stats;
pub mod table;

use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind, Grid, RawConfig};
pub use experiments::run_experiment;
pub use io::{emit_results, ingest_snapshots, IoError};
pub use stats::{fit_loglog_slope, StatsError};
pub use table::{AuxTable, Metadata, ResultRow, ResultTable};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("runtime: {0}")]
    Runtime(String),
}
