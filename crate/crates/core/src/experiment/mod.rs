//! Experiment orchestration: configuration, runs and on-disk artifacts.
//!
//! Every run writes into its output directory:
//!
//! * `manifest.toml`: the resolved config plus a `[manifest]` table with the
//!   crate version and a creation timestamp (the only non-deterministic bytes).
//! * `summary.csv`: the kind's result table.
//! * kind-specific extras: `trajectory_<start>_<noise>.csv` for `ackley`,
//!   `runs.csv` and `curves.csv` for `synthetic-sweep`, `confusion.csv` and
//!   `smoothed.csv` for `metrics-demo`.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};

pub use self::config::{
    parse_config, parse_table, AckleyParams, ConfigError, ExperimentConfig, ExperimentKind, KindParams,
    MetricsDemoParams, NoiseStatsParams, SweepParams, MANIFEST_TABLE,
};
pub use self::output::{fmt_float, fmt_opt, CONFUSION_COLUMNS};
pub use self::run::{
    ackley_grid, metrics_demo, noise_stats, run_experiment, write_manifest, AckleyRecord, NoiseStatsRow, RunArtifacts,
};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        ExperimentError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 1 for configuration problems, 2 for everything
    /// that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            _ => 2,
        }
    }
}
