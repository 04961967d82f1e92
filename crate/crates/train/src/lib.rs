//! Training pipeline: dataset ingestion and degradation, aligned patch
//! sampling with augmentation, and a resumable optimisation loop.

mod config;
pub mod dataset;
mod error;
pub mod sample;
pub mod synthetic;
mod trainer;

pub use config::{Schedule, TrainConfig};
pub use dataset::{ingest_dataset, make_pair, Dataset, LfPair, ANGULAR, CACHE_ENV};
pub use error::{Result, TrainError};
pub use sample::{sample_batch, step_rng, PatchSample};
pub use trainer::{checkpoint_name, train_loop, RunSummary, StepRecord, Trainer, FINAL_CHECKPOINT, LOSS_HEADER, LOSS_LOG};
