//! Experiment runner for `genfeller-core`: TOML configs, parallel
//! replicates, CSV/JSON artifacts and plot tables.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod parallel;
pub mod plots;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, UsageError};
pub use experiment::{run_experiment, Manifest, Outcome, RunOptions};
pub use parallel::Parallel;
