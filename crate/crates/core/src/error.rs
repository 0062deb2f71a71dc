use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid index {index} for dimension {dim}")]
    InvalidIndex { index: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("gradient inconsistency: slope {slope:e} vs -0.5*|W|^2 = {expected:e}")]
    GradientInconsistency { slope: f64, expected: f64 },

    #[error("line search failed after {halvings} halvings")]
    LineSearchFailure { halvings: usize },

    #[error("infeasible state: {0}")]
    InfeasibleState(String),

    #[error("training diverged: {0}")]
    TrainingDivergence(String),

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("graph has isolated node {0}")]
    IsolatedNode(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Schema(_) => 4,
            Error::Numerical(_)
            | Error::GradientInconsistency { .. }
            | Error::LineSearchFailure { .. }
            | Error::TrainingDivergence(_)
            | Error::NotOrthogonal(_) => 3,
            _ => 2,
        }
    }
}
