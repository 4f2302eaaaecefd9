//! Command-line front end and benchmark harness for `dust-core`.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, CliResult};
