//! Shallow networks, initialization-aware path-norms and the generalization
//! bounds built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod bounds;
pub mod datasets;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod rademacher;
pub mod trainer;

pub use error::{Error, Result};
pub use bounds::{BoundInputs, BoundValue, Method};
pub use datasets::{Dataset, TaskSpec};
pub use linalg::{Matrix, SeededRng, Vector};
pub use measures::MeasureReport;
pub use model::{Activation, Checkpoint, InitSnapshot, SnnParams};
pub use rademacher::{RadConfig, RadEstimate};
pub use trainer::{TrainConfig, TrainReport};

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
mod oracles;
