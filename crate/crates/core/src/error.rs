use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation would exceed a configured size or memory budget.
    #[error("resource limit exceeded: {what} (requested {requested}, cap {cap})")]
    Resource {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    /// An iterative method failed to converge.
    #[error("no convergence in {what} after {iterations} iterations (last estimate {last})")]
    Iteration {
        what: &'static str,
        iterations: usize,
        last: f64,
    },

    /// The default prime window of a resonator scheme contains no prime.
    #[error("empty prime window [{p0}, {p1}] for scheme {scheme}; supply an override window")]
    EmptyWindow { scheme: String, p0: f64, p1: f64 },

    /// Arithmetic would overflow 64-bit integers.
    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    /// A text file could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
