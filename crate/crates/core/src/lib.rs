//! Benchmarking harness for structure–activity regression models.
//!
//! Models are compared under random resampling (K-fold, out-of-bag bootstrap)
//! and under the quantile-activity bootstrap, where training data are drawn
//! only from the least active molecules and the fixed most-active remainder
//! is held out. Out-of-sample predictions are scored with mean squared error
//! and with two active-rank losses that only look at where the truly active
//! test molecules land in the predicted ordering.

pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod models;
pub mod plot;
pub mod report;
pub mod rng;
pub mod split;
pub mod surrogate;

pub use data::{Dataset, Fingerprint, IngestOptions, Molecule, N_BITS};
pub use error::{Error, Result};
pub use harness::{Aggregates, ExperimentConfig, LossRecord};
pub use loss::{LossKind, PredictionBatch};
pub use models::{FittedModel, ModelSpec};
pub use split::{SplitKind, SplitPlan, TrainTestSplit};
