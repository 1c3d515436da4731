//! Command-line front end for the `fgd_core` toolkit.

pub mod commands;
pub mod config;
pub mod error;
pub mod scenario;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
