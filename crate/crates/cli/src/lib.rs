//! The `lesionforge` command-line pipeline: procedural assets, detection
//! datasets, tracking pairs with LFLO flow ground truth, classical baselines
//! and their evaluation.

pub mod assets;
pub mod commands;
pub mod config;
mod error;
pub mod lflo;
pub mod manifest;
pub mod output;
pub mod overlay;
pub mod predictions;

pub use error::{CliError, Result};
