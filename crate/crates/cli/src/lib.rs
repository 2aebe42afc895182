//! Batch front end: TOML run configuration, dataset walking, run manifests
//! and the `anonypipe` subcommands.

pub mod backends;
mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod manifest;

pub use cli::run;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use manifest::{ImageStatus, RunManifest};
