//! Experiment runner over `orlicz-core`: TOML configs in, solution slices,
//! margin reports and CSV summaries out.

pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, Plan};
pub use error::LabError;
