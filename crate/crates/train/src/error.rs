use std::path::{Path, PathBuf};

use lf_autodiff::TensorError;
use lf_core::LfError;
use mdfn::MdfnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("config error: {0}")]
    Config(String),
    #[error("dataset {}: {detail}", path.display())]
    Dataset { path: PathBuf, detail: String },
    #[error("step {step}: non-finite loss {loss} (sample from `{source_name}`)")]
    NonFinite { step: u64, loss: f64, source_name: String },
    #[error("step {step}: {context}: {source}")]
    Io {
        step: u64,
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] MdfnError),
    #[error(transparent)]
    Lf(#[from] LfError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl TrainError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        TrainError::Config(msg.into())
    }

    pub(crate) fn dataset(path: &Path, detail: impl Into<String>) -> Self {
        TrainError::Dataset { path: path.to_path_buf(), detail: detail.into() }
    }

    pub(crate) fn io(step: u64, context: impl Into<String>, source: std::io::Error) -> Self {
        TrainError::Io { step, context: context.into(), source }
    }
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;
