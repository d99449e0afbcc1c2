use std::path::PathBuf;

/// Errors raised by the design and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SDP solver did not converge after {iterations} iterations (relative gap {gap:e})")]
    SolverNonConvergence {
        iterations: usize,
        gap: f64,
        /// Last primal iterate, row-major, so callers can inspect it.
        last_iterate: Vec<num_complex::Complex64>,
    },

    #[error("numerical failure in {0}")]
    Numerical(String),

    #[error("sector {sector} of {sectors}: {source}")]
    Sector {
        sectors: usize,
        sector: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{what}: {size} candidates exceeds the cap of {cap}")]
    CapExceeded { what: String, size: u128, cap: u128 },

    #[error("geometry hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("unsupported file format in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the root cause is an SDP solver failure.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SolverNonConvergence { .. } | Error::Numerical(_) => true,
            Error::Sector { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
