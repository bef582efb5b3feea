//! Combined regression (COBRA) aggregation.
//!
//! The crate contains the full benchmark stack:
//!
//! * [`data`]: CSV ingestion, seeded splits and feature standardization.
//! * [`learners`]: ridge, lasso and CART weak learners.
//! * [`cobra`]: the discrete indicator-weight aggregator (unanimous and
//!   fraction-of-machines agreement).
//! * [`smooth`]: the softmax-style surrogate of the indicator weight, the
//!   smoothed squared loss in the threshold `epsilon`, its analytic
//!   derivative and a projected gradient-descent tuner.
//! * [`search`]: k-fold grid and randomized search baselines.
//! * [`metrics`]: MSE, R² and wall-clock timing.
//! * [`pipeline`]: the end-to-end benchmark driver used by the CLI.

pub mod cobra;
pub mod data;
mod error;
pub mod learners;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod search;
pub mod smooth;

pub use cobra::{AggregationSet, Agreement, CobraParams};
pub use data::{Dataset, SplitSpec, StandardizationParams};
pub use error::{Error, Result};
pub use learners::{FittedLearner, LearnerKind, LearnerSpec, PredictionMatrix};
pub use metrics::EvalReport;
pub use smooth::{GradientDescentConfig, SmoothingParams, Termination, TuneTrace, TuningSet, Variant};
