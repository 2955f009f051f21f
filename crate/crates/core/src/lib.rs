//! Label-shift estimation, detection and correction from black-box
//! predictions.
//!
//! Given a fixed classifier `f`, its outputs on labeled source data and on
//! unlabeled target data are enough to
//!
//! * estimate the importance weights `w(y) = q(y) / p(y)` and the target
//!   label distribution by solving a k×k system built from `f`'s confusion
//!   matrix ([`estimate`]),
//! * test whether the label distribution moved at all by a two-sample test
//!   on `f`'s predictions ([`detect`]),
//! * retrain a classifier by importance-weighted ERM with the clipped
//!   estimates ([`pipeline`]).
//!
//! [`shiftsim`] and [`experiment`] provide the shift protocols and the
//! seeded simulation harness. The crate is `no_std` and needs only `alloc`;
//! file formats and the command line live in `labelshift-cli`.
#![no_std]

extern crate alloc;

pub mod detect;
mod error;
pub mod estimate;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod shiftsim;
pub mod special;

pub use detect::{ShiftReport, TestMethod};
pub use error::{Error, Result};
pub use estimate::{
    ConfusionMatrix, LabelDistribution, LabelSpace, Prediction, PredictionMode, Predictions,
    SolveConfig, Solver, SourceEval, TargetEval, WeightEstimate,
};
pub use model::{Dataset, Features, SoftmaxModel, TrainConfig};
pub use rng::SeededRng;
pub use shiftsim::ShiftSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
