//! Configuration, file formats and pipeline stages behind the `dualrail` binary.

// negated comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
