use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A formula was evaluated outside its domain (zero denominator, empty sum, ...).
    Domain(&'static str),
    /// A parameter violates its type invariant.
    InvalidParam { name: &'static str, reason: String },
    /// Allocation kept resetting past the configured iteration budget.
    BoundedRetries { iterations: u32 },
    /// No alive UAV is available to act as controller.
    NoAliveUav,
    /// No admissible relay path exists under the current admission rules.
    RouteNotFound,
    /// A simulation invariant was violated mid-run.
    Invariant(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::InvalidParam { name, reason } => write!(f, "invalid `{name}`: {reason}"),
            Error::BoundedRetries { iterations } => {
                write!(f, "allocation did not converge after {iterations} iterations")
            }
            Error::NoAliveUav => f.write_str("no alive UAV available"),
            Error::RouteNotFound => f.write_str("no admissible route"),
            Error::Invariant(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { name, reason: reason.into() }
}
