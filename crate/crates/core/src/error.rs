use thiserror::Error;

/// Library-wide error type.
///
/// `InvalidInput` covers every rejected precondition (bad spectrum
/// parameters, dimension mismatches, out-of-range step indices).
/// `Inconsistent` is reserved for violations of exact identities that
/// indicate a bug or a broken factorization rather than bad input, e.g.
/// a rank-k accuracy below its theoretical lower bound.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("linear algebra backend: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn inconsistent(msg: impl Into<String>) -> Self {
        Error::Inconsistent(msg.into())
    }
}
