//! File formats and the `labelshift` command line.
//!
//! * [`predictions`]: hard and soft prediction tables
//! * [`dataset`]: labeled and unlabeled feature tables
//! * [`idx`]: MNIST-style IDX images and labels
//! * [`report`]: report documents, model files and experiment tables
//! * [`cli`]: argument parsing and command dispatch

pub mod cli;
pub mod dataset;
mod error;
pub mod idx;
pub mod predictions;
pub mod report;
pub mod runner;

pub use error::{CliError, Result};
