//! Experiment runner behind the `dscfq` binary.

pub mod bundle;
pub mod config;
pub mod error;
pub mod experiments;

pub use error::{CliError, Result};
