use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// TOML syntax or schema violation; the message carries the line and
    /// column.
    #[error("{0}")]
    Parse(String),

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("simulation failed: {0}")]
    Numeric(#[from] inertia_core::Error),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadConfig { .. } | CliError::Parse(_) | CliError::Invalid(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Write { .. } | CliError::Pool(_) => 1,
        }
    }
}
