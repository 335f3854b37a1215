//! Experiment runner: configuration files, CSV traces and the CLI verbs.

pub mod commands;
pub mod config;
pub mod error;
pub mod trace_csv;

pub use config::{AlgorithmKind, ExperimentConfig, ProblemSpec};
pub use error::CliError;
