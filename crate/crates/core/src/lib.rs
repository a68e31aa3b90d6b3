//! Modeling of organic-solar-cell efficiency degradation from tabular
//! measurement data.
//!
//! The crate pairs two complementary approaches behind one dataset model:
//!
//! * [`curvefit`] — classical univariate fits of five parametric decay
//!   shapes (two exponential, two Gaussian, one cubic) by damped nonlinear
//!   least squares, with a windowed fit-and-forecast protocol.
//! * [`learners`] — from-scratch multivariate regressors (linear, random
//!   forest, gradient boosting, multilayer perceptron) behind a common
//!   train/predict trait, with grid search and permutation importance.
//! * [`pipeline`] — the automated benchmark: curate, sweep
//!   algorithm × split size × feature-filter variant over time cutoffs,
//!   select champions by validation RMSE, verify with baseline tests and
//!   cross-validation, attribute with exact Shapley values, and emit
//!   JSON/markdown/SVG reports.
//!
//! Supporting modules: [`data`] (schema, CSV ingestion, curation,
//! deterministic splits), [`metrics`], [`jv`] (J-V sweep parameter
//! extraction), and [`seed`] (derived RNG streams). Every random choice
//! flows from explicit seeds; identical inputs give byte-identical outputs
//! regardless of thread count.

pub mod curvefit;
pub mod data;
pub mod jv;
pub mod learners;
mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod seed;
