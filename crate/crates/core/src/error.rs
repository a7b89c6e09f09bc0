use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration invariant is violated. `path` names the offending field.
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Two series that must share a sample grid do not.
    #[error("sample grid mismatch: {0}")]
    GridMismatch(String),

    /// A spectral-analysis request cannot be satisfied by the given data.
    #[error("spectral analysis: {0}")]
    Spectrum(String),

    /// Every optimizer start failed to produce a finite objective.
    #[error("optimization failed: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// One violated invariant, reported with the field path it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Config {
            path: v.path,
            message: v.message,
        }
    }
}
