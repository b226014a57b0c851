//! Command-line front end for `stochreach`: TOML experiment configs, the
//! certify / reach / validate pipeline, and the JSON and CSV output formats.

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use config::{ExperimentConfig, Method, Overrides};
pub use error::CliError;
