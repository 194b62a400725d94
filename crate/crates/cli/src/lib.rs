//! Command-line front end: configuration, simulation runs, comparison and
//! file export.

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod gridio;

pub use error::{exit, CliError, Result};
