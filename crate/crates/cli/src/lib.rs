//! Command-line front end: scenario files, trajectory CSV, rasters and run
//! manifests around `riskbound-core`.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod raster;
pub mod scenario;
pub mod trajio;

pub use commands::{run, Cli};
pub use error::CliError;
