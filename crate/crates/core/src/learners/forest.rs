//! Bagged random-forest regression.

use super::model::Standardization;
use super::spec::{
    get_bool, get_optional_depth, get_usize, get_text, HyperParams, HyperValue, TrainError,
};
use super::tree::{FeatureSubset, RegressionTree, TreeParams};
use super::{FittedState, LearnerFamily};
use crate::data::Features;
use crate::seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub struct RandomForest;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForestState {
    trees: Vec<RegressionTree>,
}

impl RandomForestState {
    /// Per-tree predictions, in tree order.
    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }
}

impl FittedState for RandomForestState {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    fn state_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("forest serializes")
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

fn subset_from(text: &str) -> Result<FeatureSubset, TrainError> {
    match text {
        "all" => Ok(FeatureSubset::All),
        "sqrt" => Ok(FeatureSubset::Sqrt),
        other => Err(TrainError::BadHyperparam {
            name: "features_per_split".into(),
            reason: format!("expected \"all\" or \"sqrt\", got \"{other}\""),
        }),
    }
}

impl LearnerFamily for RandomForest {
    fn name(&self) -> &'static str {
        "RF"
    }

    fn default_hyperparams(&self) -> HyperParams {
        HyperParams::from([
            ("trees".into(), HyperValue::Int(100)),
            ("max_depth".into(), HyperValue::Text("none".into())),
            ("min_leaf".into(), HyperValue::Int(1)),
            ("features_per_split".into(), HyperValue::Text("all".into())),
            ("bootstrap".into(), HyperValue::Bool(true)),
        ])
    }

    /// trees {100, 400} × max_depth {none, 10} × min_leaf {1, 3} ×
    /// features_per_split {all, sqrt}, defaults first.
    fn search_grid(&self) -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for trees in [100i64, 400] {
            for depth in [HyperValue::Text("none".into()), HyperValue::Int(10)] {
                for min_leaf in [1i64, 3] {
                    for subset in ["all", "sqrt"] {
                        let mut p = self.default_hyperparams();
                        p.insert("trees".into(), HyperValue::Int(trees));
                        p.insert("max_depth".into(), depth.clone());
                        p.insert("min_leaf".into(), HyperValue::Int(min_leaf));
                        p.insert("features_per_split".into(), HyperValue::Text(subset.into()));
                        grid.push(p);
                    }
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
        let tree_params = TreeParams {
            max_depth: get_optional_depth(params, "max_depth")?,
            min_leaf: get_usize(params, "min_leaf")?.max(1),
            feature_subset: subset_from(get_text(params, "features_per_split")?)?,
        };
        let bootstrap = get_bool(params, "bootstrap")?;
        let n = x.n_rows();

        // per-tree seeds derive from (seed, tree index); growth order is
        // therefore independent of scheduling
        let trees: Vec<RegressionTree> = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(
                    seed_value,
                    &[seed::label("rf-tree"), t as u64],
                ));
                let rows: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                RegressionTree::fit(x, y, &rows, &tree_params, &mut rng)
            })
            .collect();

        Ok((None, Arc::new(RandomForestState { trees })))
    }

    fn load_state(
        &self,
        state: &serde_json::Value,
    ) -> Result<Arc<dyn FittedState>, super::spec::PersistError> {
        let state: RandomForestState = serde_json::from_value(state.clone())?;
        Ok(Arc::new(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, LearnerSpec};

    fn line_data(n: usize) -> (Features, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(0.0..1.0);
            let x2: f64 = rng.gen_range(0.0..1.0);
            data.extend_from_slice(&[x1, x2]);
            y.push(x1);
        }
        (Features::new(vec!["x1".into(), "x2".into()], data, n), y)
    }

    #[test]
    fn memorizing_forest_reproduces_training_targets() {
        let (x, y) = line_data(40);
        let spec = LearnerSpec::new("RF", 0)
            .with("trees", HyperValue::Int(1))
            .with("bootstrap", HyperValue::Bool(false));
        let model = train(&spec, &x, &y).unwrap();
        let predicted = model.predict(&x).unwrap();
        for (p, t) in predicted.iter().zip(&y) {
            assert_eq!(p, t);
        }
    }

    #[test]
    fn prediction_is_mean_of_tree_predictions() {
        let (x, y) = line_data(60);
        let spec = LearnerSpec::new("RF", 3).with("trees", HyperValue::Int(25));
        let model = train(&spec, &x, &y).unwrap();
        let state = model
            .state()
            .as_any()
            .downcast_ref::<RandomForestState>()
            .unwrap();
        for i in [0usize, 10, 59] {
            let per_tree = state.tree_predictions(x.row(i));
            assert_eq!(per_tree.len(), 25);
            let mean: f64 = per_tree.iter().sum::<f64>() / 25.0;
            assert_eq!(model.predict_row(x.row(i)), mean);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = line_data(80);
        let spec = LearnerSpec::new("RF", 11).with("trees", HyperValue::Int(50));
        let a = train(&spec, &x, &y).unwrap();
        let b = train(&spec, &x, &y).unwrap();
        assert_eq!(
            a.state().state_json().to_string(),
            b.state().state_json().to_string()
        );
        let pa = a.predict(&x).unwrap();
        let pb = b.predict(&x).unwrap();
        assert_eq!(pa, pb);
    }
}
