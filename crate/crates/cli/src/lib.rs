//! Command-line harness for forcelab: condition files, tactics, scenario
//! runs and reports.

pub mod cli;
pub mod doc;
pub mod report;
pub mod scenario;

pub use cli::{run_cli, Output, SEED_ENV};
