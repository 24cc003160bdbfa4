use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular: zero pivot in column {0}")]
    Singular(usize),

    #[error("zero pivot in row {row} of the incomplete factorization")]
    ZeroPivot { row: usize },

    #[error("iterate became non-finite at iteration {0}")]
    Divergence(usize),

    #[error("{method} did not converge in {iterations} iterations")]
    NotConverged { method: String, iterations: usize },

    #[error("unsupported in this mode: {0}")]
    Unsupported(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a failing solve.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Unsupported(_) | Error::MatrixMarket(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
