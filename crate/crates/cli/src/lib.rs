//! Library behind the `slurg` binary. Every subcommand is reachable from
//! here so tests can drive the pipeline in process.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod ops;
pub mod pipeline;
pub mod report;

pub use error::{CliError, CliResult, ErrorClass};
pub use manifest::RunManifest;
pub use pipeline::{PipelineConfig, PipelineOutput};
