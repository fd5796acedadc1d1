//! File formats, configuration, parallel drivers and the command line for
//! [`klmc_core`].

pub mod cli;
pub mod config;
pub mod drivers;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};
