use std::path::PathBuf;

use thiserror::Error;

/// Problems detected before anything is written; exit code 2.
#[derive(Debug, Error)]
pub enum UsageError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid parameters: {0}")]
    Invalid(#[from] genfeller_core::Error),
    #[error("table {path}: {reason}")]
    Table { path: PathBuf, reason: String },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error("no artifacts found in {0}")]
    MissingArtifact(PathBuf),
    #[error("simulation failed: {0}")]
    Simulation(#[from] genfeller_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingArtifact(_) => 2,
            _ => 1,
        }
    }
}
