//! Command-line driver: TOML experiment configs, deterministic parallel
//! ensembles and CSV/JSON outputs.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::{Check, ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use manifest::{Manifest, MANIFEST_FILE};
pub use run::{run, ConvergenceRow, RunOptions, RunReport};
