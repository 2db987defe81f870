//! Configuration, sweep drivers and CSV output for the `dedsim` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use config::{load_config, parse_config, RunConfig};
pub use error::CliError;
