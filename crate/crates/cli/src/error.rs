use std::path::{Path, PathBuf};

use lesionforge::poissonblend::SolveReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("assets missing: {0}")]
    Assets(String),
    #[error("generation failed for seed {seed}: {message}")]
    Generation { seed: u64, message: String },
    #[error("split leaves class {0} without training samples")]
    EmptyClass(String),
    #[error("cannot write flow output under {path}: {message}")]
    FlowWrite { path: PathBuf, message: String },
    #[error("solver did not converge: {} iterations, relative residual {:.3e}", .0.iterations, .0.relative_residual)]
    NotConverged(SolveReport),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) | CliError::Usage(_) => 2,
            CliError::Assets(_) => 3,
            CliError::Generation { .. } | CliError::EmptyClass(_) => 4,
            CliError::FlowWrite { .. } => 5,
            CliError::NotConverged(_) => 6,
            CliError::Io { .. } | CliError::File { .. } => 1,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn file(path: &Path, message: impl ToString) -> CliError {
        CliError::File { path: path.to_path_buf(), message: message.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
