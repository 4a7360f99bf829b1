//! Command-line front end, file formats and parallel drivers for
//! [`affwalk_core`].

pub mod batch;
pub mod cli;
pub mod config;
pub mod error;
pub mod records;

pub use error::CliError;
