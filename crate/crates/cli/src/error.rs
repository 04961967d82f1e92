use std::fmt;
use std::path::Path;

use lf_autodiff::TensorError;
use lf_core::LfError;
use mdfn::MdfnError;
use mdfn_train::TrainError;

pub const EXIT_FAILURE: i32 = 1;
/// Bad configuration, arguments or dataset.
pub const EXIT_INPUT: i32 = 2;
/// Output location cannot be written.
pub const EXIT_OUTPUT: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        CliError { code: EXIT_INPUT, message: msg.to_string() }
    }

    pub fn output(path: &Path, err: impl fmt::Display) -> Self {
        CliError { code: EXIT_OUTPUT, message: format!("cannot write {}: {err}", path.display()) }
    }

    pub fn failure(msg: impl fmt::Display) -> Self {
        CliError { code: EXIT_FAILURE, message: msg.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::Dataset { .. } => CliError::input(e),
            TrainError::Io { .. } => CliError { code: EXIT_OUTPUT, message: e.to_string() },
            TrainError::Model(m) => m.into(),
            TrainError::Lf(l) => l.into(),
            _ => CliError::failure(e),
        }
    }
}

impl From<MdfnError> for CliError {
    fn from(e: MdfnError) -> Self {
        match e {
            MdfnError::Config(_) | MdfnError::Checkpoint(_) => CliError::input(e),
            MdfnError::Lf(l) => l.into(),
            MdfnError::Tensor(t) => t.into(),
        }
    }
}

impl From<LfError> for CliError {
    fn from(e: LfError) -> Self {
        CliError::input(e)
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        match e {
            TensorError::Checkpoint(_) | TensorError::Io(_) | TensorError::Shape { .. } => CliError::input(e),
            _ => CliError::failure(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
