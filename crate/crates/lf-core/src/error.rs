use thiserror::Error;

#[derive(Debug, Error)]
pub enum LfError {
    #[error("{axis} index {index} out of range 0..{len}")]
    Range { axis: &'static str, index: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    Dims(String),
    #[error("plane kind mismatch: batch holds {found:?}, expected {expected:?}")]
    Kind { expected: crate::PlaneKind, found: crate::PlaneKind },
    #[error("expected {expected} channel(s), got {found}")]
    Channels { expected: usize, found: usize },
    #[error("invalid transform: {0}")]
    Transform(String),
    #[error("format error in {path}: {detail}")]
    Format { path: String, detail: String },
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LfError {
    pub(crate) fn dims(detail: impl Into<String>) -> Self {
        LfError::Dims(detail.into())
    }

    pub(crate) fn format(path: &std::path::Path, detail: impl Into<String>) -> Self {
        LfError::Format { path: path.display().to_string(), detail: detail.into() }
    }
}

pub type Result<T, E = LfError> = std::result::Result<T, E>;
