//! Experiment driver for the shallow-network bound study: configuration,
//! the train/measure/bound sweep, the Rademacher probe and figure output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod figure;
pub mod rad;
pub mod svg;
pub mod tables;

pub use config::{ExperimentConfig, FigureKind};
pub use error::CliError;
