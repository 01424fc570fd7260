//! Command-line front end: panel CSV input, configuration and output files.

pub mod args;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use error::{CliError, Result};
