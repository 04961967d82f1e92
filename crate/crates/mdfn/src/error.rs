use lf_autodiff::TensorError;
use lf_core::LfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MdfnError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Lf(#[from] LfError),
}

impl MdfnError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        MdfnError::Config(msg.into())
    }
}

pub type Result<T, E = MdfnError> = std::result::Result<T, E>;
