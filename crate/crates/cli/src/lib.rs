//! Command implementations behind the `corridor` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

pub use commands::{cmd_algebra_check, cmd_ensemble, cmd_evolve, cmd_free_propagator, UsageError};
pub use report::RunReport;
