use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A named structural invariant does not hold.
    #[error("invariant violated: {name}: {detail}")]
    Invariant { name: &'static str, detail: String },

    #[error("{quantity} = {value} outside {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("numeric failure after {iterations} iterations: {reason}")]
    Numeric { iterations: usize, reason: String },

    #[error("grid mismatch: {left_len} points (dt={left_dt}) vs {right_len} points (dt={right_dt})")]
    GridMismatch {
        left_len: usize,
        left_dt: f64,
        right_len: usize,
        right_dt: f64,
    },

    #[error("refusing to simulate: about {estimate:.3e} expected events exceeds the limit of {limit:.0e}")]
    TooManyEvents { estimate: f64, limit: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn invariant(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            name,
            detail: detail.into(),
        }
    }
}
