use thiserror::Error;

/// Errors produced by grid construction, topology computations and codecs.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("index {index:?} out of range for extents {dims:?}")]
    Index { index: Vec<usize>, dims: Vec<usize> },
    #[error("expected a {expected}D grid, got {actual}D")]
    Dimensionality { expected: usize, actual: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("format error in {field} at byte {offset}: {message}")]
    Format { field: &'static str, offset: usize, message: String },
}

impl Error {
    pub(crate) fn format(field: &'static str, offset: usize, message: impl Into<String>) -> Self {
        Error::Format { field, offset, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
