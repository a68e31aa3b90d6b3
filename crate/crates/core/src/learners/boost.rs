//! Gradient boosting: depth-limited trees fitted sequentially to residuals
//! with shrinkage.

use super::model::Standardization;
use super::spec::{get_f64, get_usize, HyperParams, HyperValue, TrainError};
use super::tree::{FeatureSubset, RegressionTree, TreeParams};
use super::{FittedState, LearnerFamily};
use crate::data::Features;
use crate::seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub struct GradientBoosting;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientBoostingState {
    base: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl GradientBoostingState {
    /// Prediction truncated to the first `m` trees. The full prediction
    /// after m trees equals the prediction after m − 1 plus the shrunken
    /// m-th tree output, exactly.
    pub fn staged_prediction(&self, row: &[f64], m: usize) -> f64 {
        let mut acc = self.base;
        for tree in self.trees.iter().take(m) {
            acc += self.learning_rate * tree.predict_row(row);
        }
        acc
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn tree_output(&self, row: &[f64], m: usize) -> f64 {
        self.trees[m].predict_row(row)
    }
}

impl FittedState for GradientBoostingState {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.staged_prediction(row, self.trees.len())
    }

    fn state_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("booster serializes")
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

impl LearnerFamily for GradientBoosting {
    fn name(&self) -> &'static str {
        "GB"
    }

    fn default_hyperparams(&self) -> HyperParams {
        HyperParams::from([
            ("trees".into(), HyperValue::Int(100)),
            ("learning_rate".into(), HyperValue::Float(0.1)),
            ("depth".into(), HyperValue::Int(3)),
        ])
    }

    /// trees {100, 300} × learning_rate {0.1, 0.05} × depth {3, 2},
    /// defaults first.
    fn search_grid(&self) -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for trees in [100i64, 300] {
            for lr in [0.1f64, 0.05] {
                for depth in [3i64, 2] {
                    let mut p = self.default_hyperparams();
                    p.insert("trees".into(), HyperValue::Int(trees));
                    p.insert("learning_rate".into(), HyperValue::Float(lr));
                    p.insert("depth".into(), HyperValue::Int(depth));
                    grid.push(p);
                }
            }
        }
        grid
    }

    fn fit(
        &self,
        params: &HyperParams,
        seed_value: u64,
        x: &Features,
        y: &[f64],
    ) -> Result<(Option<Standardization>, Arc<dyn FittedState>), TrainError> {
        let n_trees = get_usize(params, "trees")?.max(1);
        let learning_rate = get_f64(params, "learning_rate")?;
        let depth = get_usize(params, "depth")?.max(1);
        let tree_params = TreeParams {
            max_depth: Some(depth),
            min_leaf: 1,
            feature_subset: FeatureSubset::All,
        };
        let n = x.n_rows();
        let rows: Vec<usize> = (0..n).collect();
        let base = y.iter().sum::<f64>() / n as f64;
        // running prediction updated exactly the way predict_row accumulates
        let mut current = vec![base; n];
        let mut trees = Vec::with_capacity(n_trees);
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed::derive(seed_value, &[seed::label("gb")]));
        for _ in 0..n_trees {
            let residual: Vec<f64> = y.iter().zip(&current).map(|(t, c)| t - c).collect();
            let tree = RegressionTree::fit(x, &residual, &rows, &tree_params, &mut rng);
            for (i, c) in current.iter_mut().enumerate() {
                *c += learning_rate * tree.predict_row(x.row(i));
            }
            trees.push(tree);
        }
        Ok((None, Arc::new(GradientBoostingState { base, learning_rate, trees })))
    }

    fn load_state(
        &self,
        state: &serde_json::Value,
    ) -> Result<Arc<dyn FittedState>, super::spec::PersistError> {
        let state: GradientBoostingState = serde_json::from_value(state.clone())?;
        Ok(Arc::new(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, LearnerSpec};
    use rand::Rng;

    fn wavy_data(n: usize) -> (Features, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(0.0..6.0);
            data.push(x1);
            y.push(x1.sin() + 0.5 * x1);
        }
        (Features::new(vec!["x1".into()], data, n), y)
    }

    #[test]
    fn zero_learning_rate_predicts_training_mean() {
        let (x, y) = wavy_data(30);
        let spec = LearnerSpec::new("GB", 0).with("learning_rate", HyperValue::Float(0.0));
        let model = train(&spec, &x, &y).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for p in model.predict(&x).unwrap() {
            assert_eq!(p, mean);
        }
    }

    #[test]
    fn staged_predictions_telescope_exactly() {
        let (x, y) = wavy_data(50);
        let spec = LearnerSpec::new("GB", 0).with("trees", HyperValue::Int(20));
        let model = train(&spec, &x, &y).unwrap();
        let state = model
            .state()
            .as_any()
            .downcast_ref::<GradientBoostingState>()
            .unwrap();
        let row = x.row(17);
        for m in 1..=state.n_trees() {
            let a = state.staged_prediction(row, m);
            let b = state.staged_prediction(row, m - 1)
                + state.learning_rate() * state.tree_output(row, m - 1);
            assert_eq!(a, b);
        }
        assert_eq!(state.staged_prediction(row, state.n_trees()), model.predict_row(row));
    }

    #[test]
    fn boosting_reduces_training_error_over_mean() {
        let (x, y) = wavy_data(80);
        let model = train(&LearnerSpec::new("GB", 0), &x, &y).unwrap();
        let r2 = model.training_metrics.r2.unwrap();
        assert!(r2 > 0.9, "r2 = {r2}");
    }
}
