use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frequency grid mismatch: {0}")]
    GridMismatch(String),

    #[error("exponential overflow at bin {bin}: {detail}")]
    Overflow { bin: usize, detail: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("no position fix found (best residual {best_residual:.3e} m)")]
    NoFix { best_residual: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the command-line front-end:
    /// 2 usage error, 3 data error, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::InvalidInput(_)
            | Error::GridMismatch(_)
            | Error::MissingFile(_)
            | Error::MalformedManifest(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Wav(_) => 3,
            Error::Overflow { .. }
            | Error::Degenerate(_)
            | Error::TrainingDiverged { .. }
            | Error::NoFix { .. } => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
