//! From-scratch regression learners behind a common train/predict contract.
//!
//! Each algorithm family implements [`LearnerFamily`] and registers itself
//! in [`registry`]; callers select a family by name ("MVL", "RF", "GB",
//! "NN") at runtime. Training is deterministic under the spec seed no matter
//! how many threads run.

mod boost;
mod forest;
mod linear;
mod model;
mod nn;
mod pfi;
mod search;
mod spec;
mod tree;

pub use boost::{GradientBoosting, GradientBoostingState};
pub use forest::{RandomForest, RandomForestState};
pub use linear::{LinearModelState, MultivariateLinear};
pub use model::{Standardization, TrainedModel};
pub use nn::{NeuralNet, NeuralNetState};
pub use pfi::{permutation_importance, FeatureImportance};
pub use search::{hyperparam_search, SearchEval, SearchResult};
pub use spec::{HyperParams, HyperValue, LearnerSpec, PersistError, PredictError, TrainError};
pub use tree::{FeatureSubset, RegressionTree, TreeParams};

use crate::data::Features;
use crate::metrics::MetricsBundle;
use std::sync::Arc;

/// One trainable algorithm family. Implementations are stateless strategy
/// objects; all fitted state lives behind [`FittedState`].
pub trait LearnerFamily: Send + Sync {
    fn name(&self) -> &'static str;
    /// Complete hyperparameter assignment used when the spec leaves gaps.
    fn default_hyperparams(&self) -> HyperParams;
    /// Documented search grid; entry 0 must equal the defaults.
    fn search_grid(&self) -> Vec<HyperParams>;
    fn fit(
        &self,
        params: &HyperParams,
        seed: u64,
        x: &Features,
        y: &[f64],
    ) -> Result<(Option<Standardization>, Arc<dyn FittedState>), TrainError>;
    fn load_state(&self, state: &serde_json::Value) -> Result<Arc<dyn FittedState>, PersistError>;
}

/// Immutable fitted state of one model; safe to share across threads.
pub trait FittedState: Send + Sync {
    /// Predicts one row (already standardized when the family uses
    /// standardization).
    fn predict_row(&self, row: &[f64]) -> f64;
    fn state_json(&self) -> serde_json::Value;
    fn as_any(&self) -> &dyn std::any::Any;
}

/// All registered families.
pub fn registry() -> &'static [&'static dyn LearnerFamily] {
    &[&MultivariateLinear, &RandomForest, &GradientBoosting, &NeuralNet]
}

/// Finds a registered family by name.
pub fn family(name: &str) -> Option<&'static dyn LearnerFamily> {
    registry().iter().copied().find(|f| f.name() == name)
}

/// Merges the spec's hyperparameters over the family defaults; an unknown
/// name is an error rather than a silent ignore.
fn complete_params(
    family: &dyn LearnerFamily,
    given: &HyperParams,
) -> Result<HyperParams, TrainError> {
    let mut params = family.default_hyperparams();
    for (name, value) in given {
        if !params.contains_key(name) {
            return Err(TrainError::UnknownHyperparam {
                family: family.name().to_string(),
                name: name.clone(),
            });
        }
        params.insert(name.clone(), value.clone());
    }
    Ok(params)
}

/// Trains a model for the spec's family. The stored spec carries the
/// completed hyperparameters, so retraining it reproduces the model exactly.
pub fn train(spec: &LearnerSpec, x: &Features, y: &[f64]) -> Result<TrainedModel, TrainError> {
    if x.n_rows() != y.len() {
        return Err(TrainError::LengthMismatch { rows: x.n_rows(), targets: y.len() });
    }
    if x.n_rows() < 5 {
        return Err(TrainError::TooFewRows { rows: x.n_rows(), min: 5 });
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(TrainError::NonFiniteInput);
    }
    let family = family(&spec.family).ok_or_else(|| TrainError::UnknownFamily(spec.family.clone()))?;
    let params = complete_params(family, &spec.hyperparams)?;
    let (standardization, state) = family.fit(&params, spec.seed, x, y)?;

    let mut model = TrainedModel {
        spec: LearnerSpec {
            family: family.name().to_string(),
            hyperparams: params,
            seed: spec.seed,
        },
        feature_names: x.names().to_vec(),
        standardization,
        training_metrics: MetricsBundle { r2: None, rmse: 0.0, sse: 0.0, mae: 0.0, n: 0 },
        training_groups: Default::default(),
        state,
    };
    let predictions: Vec<f64> = (0..x.n_rows()).map(|i| model.predict_row(x.row(i))).collect();
    model.training_metrics =
        MetricsBundle::compute(y, &predictions).expect("training partition is non-empty");
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_the_four_families() {
        let names: Vec<&str> = registry().iter().map(|f| f.name()).collect();
        assert_eq!(names, vec!["MVL", "RF", "GB", "NN"]);
        assert!(family("RF").is_some());
        assert!(family("rf").is_none());
    }

    #[test]
    fn grids_start_at_the_defaults() {
        for f in registry() {
            assert_eq!(f.search_grid()[0], f.default_hyperparams(), "family {}", f.name());
        }
    }

    #[test]
    fn unknown_hyperparameter_is_an_error() {
        let x = Features::new(vec!["a".into()], vec![0.0, 1.0, 2.0, 3.0, 4.0], 5);
        let y = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let spec = LearnerSpec::new("RF", 0).with("tress", HyperValue::Int(10));
        assert!(matches!(
            train(&spec, &x, &y),
            Err(TrainError::UnknownHyperparam { .. })
        ));
    }

    #[test]
    fn too_few_rows_and_nonfinite_rejected() {
        let x = Features::new(vec!["a".into()], vec![0.0, 1.0], 2);
        assert!(matches!(
            train(&LearnerSpec::new("MVL", 0), &x, &[0.0, 1.0]),
            Err(TrainError::TooFewRows { .. })
        ));
        let x = Features::new(vec!["a".into()], vec![0.0, 1.0, f64::NAN, 3.0, 4.0], 5);
        assert!(matches!(
            train(&LearnerSpec::new("MVL", 0), &x, &[0.0; 5]),
            Err(TrainError::NonFiniteInput)
        ));
    }
}
