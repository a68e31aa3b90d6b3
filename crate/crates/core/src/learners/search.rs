//! Grid-based hyperparameter search scored by validation RMSE.

use super::spec::{LearnerSpec, TrainError};
use crate::data::Features;
use crate::metrics;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchEval {
    pub spec: LearnerSpec,
    pub train_rmse: f64,
    pub valid_rmse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: LearnerSpec,
    pub evaluations: Vec<SearchEval>,
}

/// Evaluates the first `budget` entries of the family's documented grid
/// (entry 0 is the default spec) and returns the one with the lowest
/// validation RMSE; ties keep the earlier entry. A candidate that fails to
/// train is recorded and skipped rather than aborting the search.
pub fn hyperparam_search(
    family_name: &str,
    x_train: &Features,
    y_train: &[f64],
    x_valid: &Features,
    y_valid: &[f64],
    budget: usize,
    seed: u64,
) -> Result<SearchResult, TrainError> {
    let family = super::family(family_name)
        .ok_or_else(|| TrainError::UnknownFamily(family_name.to_string()))?;
    let grid = family.search_grid();
    let budget = budget.max(1).min(grid.len());

    let mut evaluations = Vec::with_capacity(budget);
    let mut best: Option<(usize, f64)> = None;
    for (i, params) in grid.into_iter().take(budget).enumerate() {
        let spec = LearnerSpec { family: family.name().to_string(), hyperparams: params, seed };
        let eval = match super::train(&spec, x_train, y_train) {
            Err(err) => SearchEval {
                spec,
                train_rmse: f64::INFINITY,
                valid_rmse: f64::INFINITY,
                error: Some(err.to_string()),
            },
            Ok(model) => {
                let predictions = model
                    .predict(x_valid)
                    .expect("search partitions share one column layout");
                let valid_rmse = metrics::rmse(y_valid, &predictions)
                    .expect("non-empty validation partition");
                SearchEval {
                    spec: model.spec.clone(),
                    train_rmse: model.training_metrics.rmse,
                    valid_rmse,
                    error: None,
                }
            }
        };
        if eval.error.is_none() {
            let better = match best {
                None => true,
                Some((_, rmse)) => eval.valid_rmse < rmse,
            };
            if better {
                best = Some((i, eval.valid_rmse));
            }
        }
        evaluations.push(eval);
    }

    match best {
        Some((i, _)) => Ok(SearchResult { best: evaluations[i].spec.clone(), evaluations }),
        None => Err(TrainError::AllCandidatesFailed {
            first: evaluations
                .first()
                .and_then(|e| e.error.clone())
                .unwrap_or_else(|| "empty grid".into()),
        }),
    }
}
