//! File formats, checkpoints and the `specap` command line.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod manifest;
pub mod report_diff;

pub use error::{CliError, Result};
