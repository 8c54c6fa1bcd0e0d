//! Experiment runner for the transonic shock solvers: TOML configs in,
//! comma-separated series, a JSON manifest and SVG plots out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod plot;

pub use config::{validate, ExperimentConfig, Kind};
pub use error::{CliError, Result};
pub use manifest::{run, Manifest, RunRequest};
