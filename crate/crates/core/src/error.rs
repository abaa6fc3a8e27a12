use thiserror::Error;

/// Failure modes of the library, grouped by the exit status the CLI reports.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
    #[error("genericity violation: {0}")]
    Genericity(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("no convergence in {what} (last residual {residual:.3e})")]
    Convergence { what: String, residual: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status associated with this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Config(_) => 2,
            Error::Hypothesis(_) | Error::Genericity(_) | Error::Structure(_) => 3,
            Error::Domain(_)
            | Error::Capability(_)
            | Error::Convergence { .. }
            | Error::Numeric(_)
            | Error::Io(_) => 4,
        }
    }

    pub(crate) fn convergence(what: impl Into<String>, residual: f64) -> Error {
        Error::Convergence { what: what.into(), residual }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
