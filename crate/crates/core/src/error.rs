use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure failed to reach its accuracy or convergence target.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A requested computation exceeds a configured resource budget.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
