use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("the zero polynomial is not allowed here")]
    ZeroPolynomial,
    #[error("not a sandpile polynomial: {0}")]
    NotSandpile(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("site {0} is stable and cannot topple")]
    StableSite(usize),
    #[error("configuration is not stable")]
    NotStable,
    #[error("configuration is not recurrent")]
    NotRecurrent,
    #[error("{what}: {size} exceeds the limit {limit}")]
    Guard { what: String, size: u128, limit: u128 },
    #[error("polynomial is not certified expansive")]
    NotExpansive,
    #[error("tolerance {tolerance:e} not reached (best {achieved:e})")]
    ToleranceUnreachable { tolerance: f64, achieved: f64 },
    #[error("singular matrix")]
    Singular,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn guard(what: &str, size: u128, limit: u128) -> Result<()> {
    if size > limit {
        Err(Error::Guard { what: what.to_string(), size, limit })
    } else {
        Ok(())
    }
}
