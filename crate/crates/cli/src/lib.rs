//! Experiment runner behind the `bottleneck` binary: JSON configuration,
//! subcommands and CSV/JSON report writing.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;
