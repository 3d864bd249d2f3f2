//! Error type shared across the crate.
//!
//! Variants map onto the CLI exit codes: configuration and domain errors exit
//! with 1, verification failures with 2, and I/O failures with 3.

use thiserror::Error;

/// Unified error type for configuration, numerical, and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: inconsistent dimensions, infeasible sparsity,
    /// unparseable flags or config files.
    #[error("configuration error: {0}")]
    Config(String),

    /// Valid configuration but mathematically undefined request, e.g. NMSE
    /// against a zero-norm truth.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative run produced a non-finite value.
    #[error("divergence at iteration {iteration}")]
    Divergence { iteration: usize },

    /// A numerical identity check exceeded its tolerance.
    #[error("verification failure: {0}")]
    Verification(String),

    /// File-system failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for this error per the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Divergence { .. } => 1,
            Error::Verification(_) => 2,
            Error::Io { .. } => 3,
        }
    }

    /// Wrap an `std::io::Error` with the offending path.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
