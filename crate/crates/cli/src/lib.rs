//! The `burnscan` command-line tool: configuration, the end-to-end run,
//! report and quicklook writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod quicklook;
pub mod report;

pub use commands::run_from_args;
pub use error::CliError;
