//! Permutation feature importance on held-out data.

use super::model::TrainedModel;
use super::spec::PredictError;
use crate::data::Features;
use crate::metrics;
use crate::seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Mean increase in held-out RMSE after permuting each feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature_names: Vec<String>,
    pub importances: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
}

impl FeatureImportance {
    /// Index of the largest importance.
    pub fn top_feature(&self) -> usize {
        self.importances
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Features whose importance reaches `fraction` of the maximum. When no
    /// importance is positive the filter keeps everything.
    pub fn filter_names(&self, fraction: f64) -> Vec<String> {
        let max = self.importances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return self.feature_names.clone();
        }
        let kept: Vec<String> = self
            .feature_names
            .iter()
            .zip(&self.importances)
            .filter(|(_, &imp)| imp >= fraction * max)
            .map(|(n, _)| n.clone())
            .collect();
        if kept.is_empty() {
            vec![self.feature_names[self.top_feature()].clone()]
        } else {
            kept
        }
    }
}

/// For each feature, the mean over `repeats` seeded permutations of
/// `RMSE(permuted) − RMSE(baseline)`. A feature the model never reads
/// contributes exactly zero. Permutation streams derive from
/// (seed, feature, repeat), so results do not depend on evaluation order.
pub fn permutation_importance(
    model: &TrainedModel,
    x: &Features,
    y: &[f64],
    repeats: usize,
    seed_value: u64,
) -> Result<FeatureImportance, PredictError> {
    let repeats = repeats.max(1);
    let baseline_pred = model.predict(x)?;
    let baseline = metrics::rmse(y, &baseline_pred).expect("non-empty held-out data");

    let n = x.n_rows();
    let mut importances = Vec::with_capacity(x.n_cols());
    let mut working = x.clone();
    for j in 0..x.n_cols() {
        let original = x.column(j);
        let mut total = 0.0;
        for rep in 0..repeats {
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(
                seed_value,
                &[seed::label("pfi"), j as u64, rep as u64],
            ));
            order.shuffle(&mut rng);
            for (i, &src) in order.iter().enumerate() {
                working.set_value(i, j, original[src]);
            }
            let pred = model.predict(&working)?;
            total += metrics::rmse(y, &pred).expect("non-empty held-out data") - baseline;
        }
        for (i, v) in original.iter().enumerate() {
            working.set_value(i, j, *v);
        }
        importances.push(total / repeats as f64);
    }
    Ok(FeatureImportance {
        feature_names: x.names().to_vec(),
        importances,
        repeats,
        seed: seed_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, HyperValue, LearnerSpec};
    use rand::Rng;

    #[test]
    fn relevant_feature_dominates_irrelevant_one() {
        // y = 5 x1 + 0 x2
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 500;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let x2: f64 = rng.gen_range(-1.0..1.0);
            data.extend_from_slice(&[x1, x2]);
            y.push(5.0 * x1);
        }
        let x = Features::new(vec!["x1".into(), "x2".into()], data, n);
        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        let fi = permutation_importance(&model, &x, &y, 10, 0).unwrap();
        assert!(fi.importances[0] > 0.0);
        assert!(fi.importances[1].abs() < 1e-3, "noise pfi = {}", fi.importances[1]);
        assert_eq!(fi.top_feature(), 0);
    }

    #[test]
    fn ignored_feature_has_exactly_zero_importance() {
        // a stump on x1 never reads x2
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 60;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let x2: f64 = rng.gen_range(-1.0..1.0);
            data.extend_from_slice(&[x1, x2]);
            y.push(if x1 > 0.0 { 1.0 } else { -1.0 });
        }
        let x = Features::new(vec!["x1".into(), "x2".into()], data, n);
        let spec = LearnerSpec::new("RF", 0)
            .with("trees", HyperValue::Int(5))
            .with("max_depth", HyperValue::Int(1));
        let model = train(&spec, &x, &y).unwrap();
        let fi = permutation_importance(&model, &x, &y, 6, 3).unwrap();
        assert_eq!(fi.importances[1], 0.0);
    }

    #[test]
    fn constant_column_has_exactly_zero_importance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 50;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            data.extend_from_slice(&[x1, 7.5]);
            y.push(x1);
        }
        let x = Features::new(vec!["x1".into(), "const".into()], data, n);
        let spec = LearnerSpec::new("RF", 0).with("trees", HyperValue::Int(10));
        let model = train(&spec, &x, &y).unwrap();
        let fi = permutation_importance(&model, &x, &y, 5, 0).unwrap();
        assert_eq!(fi.importances[1], 0.0);
    }
}
