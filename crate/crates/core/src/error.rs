use std::path::PathBuf;

/// Errors raised anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("regime error: gamma = {gamma} must exceed 4*kappa = {}", 4.0 * kappa)]
    Regime { gamma: f64, kappa: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("non-finite values after stage `{stage}` at t = {t}")]
    BlowUp { stage: &'static str, t: f64 },

    #[error("checkpoint format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 validation, 2 numerical failure, 3 failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } | Error::SolverFailure { .. } => 2,
            Error::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
