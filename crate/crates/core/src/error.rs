use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Vector lengths, block layouts or tuple arities do not match.
    #[error("input error: {0}")]
    Input(String),
    /// An exponent or parameter lies outside its admissible range.
    #[error("config error: {0}")]
    Config(String),
    /// A numerical routine produced a non-finite value or failed to solve.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A documented precondition on the arguments does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A computed quantity violates an inequality that holds in theory.
    #[error("invariant failure: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn numeric<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Numeric(msg.into()))
}
