//! Experiment harness and command line for `pppl-core`: configuration files,
//! CSV datasets, model checkpoints, JSONL/CSV reports and the seeded runners.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
