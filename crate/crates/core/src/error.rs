use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("inconsistent data: {0}")]
    Corrupt(String),
}

pub type Result<T> = std::result::Result<T, Error>;
