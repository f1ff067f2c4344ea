use thiserror::Error;

/// Errors produced by the matrix operators, solvers, generators and file readers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its admissible range or two operands disagree in shape.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix entry was NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// The singular value decomposition failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(message: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(message.into()))
}
