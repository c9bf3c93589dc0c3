//! Command-line harness: experiment configs, check execution and report
//! output for the `ffgap` binary.

pub mod cli;
pub mod config;
pub mod suite;
pub mod table;

pub use cli::{dispatch, Cli, Outcome};
pub use config::ExperimentConfig;
pub use suite::{run, RunReport};
