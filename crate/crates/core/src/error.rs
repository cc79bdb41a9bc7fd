use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaxError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite after jitter ({context})")]
    Factorization { context: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("invalid config: {0}")]
    Config(String),
}

impl From<std::io::Error> for BaxError {
    fn from(e: std::io::Error) -> Self {
        BaxError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BaxError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(BaxError::DimensionMismatch { expected, found })
    }
}
