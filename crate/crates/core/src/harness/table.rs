//! Result tables and run metadata.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::RawConfig;

/// Column names of every results CSV, in order.
pub const RESULT_HEADER: [&str; 10] = [
    "experiment",
    "quantizer",
    "n",
    "bits",
    "median",
    "quantile25",
    "quantile75",
    "success_frac",
    "failures",
    "seed",
];

/// Statistics of one `(quantizer, grid point)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    /// Quantizer label, optionally followed by `;key=value` for the
    /// experiment's second axis (e.g. `rect;beta=0.5`).
    pub quantizer: String,
    pub n: u64,
    pub bits: u64,
    pub median: f64,
    pub quantile25: f64,
    pub quantile75: f64,
    pub success_frac: f64,
    pub failures: u64,
    pub seed: u64,
}

/// An extra CSV written next to the results (reference curves, phase boundaries).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxTable {
    /// File stem suffix: written as `<experiment>_<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub preset: String,
    /// Decimal string; TOML integers cannot hold every `u64`.
    pub seed: String,
    pub version: String,
    pub timestamp_unix: u64,
    pub trials: u64,
    pub deviations: Vec<String>,
    pub notes: Vec<String>,
    /// Fitted slopes and other scalar summaries.
    pub summary: BTreeMap<String, f64>,
    pub config: RawConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub metadata: Metadata,
    pub auxiliary: Vec<AuxTable>,
}

impl ResultTable {
    /// Rows whose quantizer column equals `series`, in grid order.
    pub fn series(&self, series: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.quantizer == series).collect()
    }

    /// Distinct quantizer-column values in first-appearance order.
    pub fn series_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.quantizer) {
                names.push(r.quantizer.clone());
            }
        }
        names
    }

    pub fn aux(&self, name: &str) -> Option<&AuxTable> {
        self.auxiliary.iter().find(|a| a.name == name)
    }
}

/// `v<crate version>`, with `-g<hash>` appended when the build sets
/// `QSUBSPACE_GIT_HASH`.
pub fn version_string() -> String {
    match option_env!("QSUBSPACE_GIT_HASH") {
        Some(hash) if !hash.is_empty() => format!("v{}-g{hash}", env!("CARGO_PKG_VERSION")),
        _ => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}
