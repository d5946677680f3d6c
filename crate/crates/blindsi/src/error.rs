use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite (failing pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("ill-conditioned problem: {0}")]
    Conditioning(String),

    #[error("all EM restarts failed: {}", .0.join("; "))]
    Estimation(Vec<String>),

    #[error("EM did not converge within {iterations} iterations (last step size {last_step:.3e})")]
    NonConvergence { iterations: usize, last_step: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code contract: 0 success, 1 usage, 2 data/validation,
    /// 3 numerical failure. Usage errors never reach this type; they are
    /// produced by the argument parser.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_)
            | Error::Input(_)
            | Error::Domain(_)
            | Error::Parse(_)
            | Error::Io { .. } => 2,
            Error::NotPositiveDefinite { .. }
            | Error::Conditioning(_)
            | Error::Estimation(_)
            | Error::NonConvergence { .. } => 3,
        }
    }
}
