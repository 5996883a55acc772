use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter or state specification violates its invariants.
    #[error("invalid {what}: {reason}")]
    InvalidSpec { what: &'static str, reason: String },

    #[error("dimension mismatch: correlation matrix has {found} sites, lattice has {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Doubling the panel count moved a kernel value by more than the tolerance.
    #[error(
        "{kernel} quadrature did not converge: panel doubling changed the result by {delta:.3e}"
    )]
    NonConvergence { kernel: &'static str, delta: f64 },

    #[error("intensity {value:.3e} at {position} is below the positivity floor")]
    NegativeIntensity { value: f64, position: f64 },

    #[error("state vector for {sites} sites exceeds the oracle limit of {limit}")]
    OracleTooLarge { sites: usize, limit: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    /// A protocol failed while running a scenario.
    #[error("protocol {protocol}: {source}")]
    Protocol {
        protocol: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::NegativeIntensity { .. } => 3,
            Error::Io { .. } => 4,
            Error::Protocol { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
