//! Command-line front end: config ingestion, the stage pipeline and report emission.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Command, Outcome, RunOptions};
pub use error::{CliError, CliResult};
pub use report::ReportRecord;
