//! Command-line front end for `lingam-order`: data generation, sorting,
//! evaluation, benchmarking and held-out likelihood.

// `!(x > y)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, Result};
