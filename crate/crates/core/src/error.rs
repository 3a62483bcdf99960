//! Crate-wide error type.
//!
//! One enum keeps diagnostics uniform across the library; the CLI maps the
//! variants onto exit codes (configuration and input problems exit 2,
//! computation failures exit 1).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A symmetric factorization hit a non-positive pivot, so the matrix is
    /// not positive definite (or is numerically too close to singular).
    #[error("matrix is not positive definite: pivot {index} is {value:.3e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {detail}")]
    Parameter { name: &'static str, detail: String },

    /// Random initialization produced an unusable object (e.g. a reservoir
    /// weight matrix with a degenerate spectrum).
    #[error("initialization failed: {0}")]
    Initialization(String),

    /// A dataset record failed validation; carries the offending sample id.
    #[error("dataset error in sample `{id}`: {detail}")]
    Sample { id: String, detail: String },

    /// A manifest or corpus-level problem independent of any single sample.
    #[error("dataset error: {0}")]
    Dataset(String),

    /// Training could not complete (degenerate labels, failed solver, ...).
    #[error("training failed: {0}")]
    Training(String),

    /// An evaluation protocol could not be planned or executed.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A serialized payload or model file is malformed.
    #[error("format error in `{path}`: {detail}")]
    Format { path: String, detail: String },

    /// Configuration file or override problem.
    #[error("config error: {0}")]
    Config(String),

    /// External corpus conversion problem.
    #[error("conversion error: {0}")]
    Convert(String),

    /// A matrix allocation exceeded what this machine can provide. Raised
    /// up front via a fallible reserve so oversized configurations (huge
    /// reservoirs, enormous readout systems) surface as ordinary errors
    /// instead of aborting the process.
    #[error("out of memory: {0}")]
    Allocation(String),

    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input (missing files, bad config),
    /// as opposed to runtime computation failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parameter { .. }
                | Error::Config(_)
                | Error::Io { .. }
                | Error::Format { .. }
                | Error::Dataset(_)
                | Error::Sample { .. }
        )
    }
}
