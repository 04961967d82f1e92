//! Command-line driver: training, evaluation, super-resolution, filter
//! inspection and EPI export.

pub mod commands;
mod error;
pub mod render;
pub mod report;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult, EXIT_FAILURE, EXIT_INPUT, EXIT_OUTPUT};
pub use report::{MetricRow, MetricsReport};
