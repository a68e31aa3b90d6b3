//! Exact Shapley attribution by coalition enumeration.
//!
//! The value function is interventional: the worth of a coalition S for an
//! explained row x is the mean model output over the background rows b of
//! the composite input that takes features in S from x and the rest from b.
//! Attribution of feature j sums the weighted marginal contributions over
//! all 2^m coalitions, so the efficiency axiom (attributions sum to
//! prediction minus baseline) holds by construction.

use super::PipelineError;
use crate::data::Features;
use crate::learners::TrainedModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Enumeration is exponential in the feature count; beyond this, use
/// permutation importance instead.
pub const MAX_SHAPLEY_FEATURES: usize = 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowAttribution {
    /// Position of the explained row within the input matrix.
    pub row: usize,
    pub prediction: f64,
    pub attributions: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub feature_names: Vec<String>,
    /// Mean prediction over the background set.
    pub baseline: f64,
    pub n_background: usize,
    pub rows: Vec<RowAttribution>,
}

impl ShapleyResult {
    /// Mean |attribution| per feature over the explained rows.
    pub fn mean_abs_attribution(&self) -> Vec<f64> {
        let m = self.feature_names.len();
        let mut out = vec![0.0; m];
        for row in &self.rows {
            for (acc, a) in out.iter_mut().zip(&row.attributions) {
                *acc += a.abs();
            }
        }
        for acc in &mut out {
            *acc /= self.rows.len().max(1) as f64;
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64
}

/// Exact Shapley values for every row in `rows` against `background`.
pub fn shapley(
    model: &TrainedModel,
    rows: &Features,
    background: &Features,
) -> Result<ShapleyResult, PipelineError> {
    let m = rows.n_cols();
    if m > MAX_SHAPLEY_FEATURES {
        return Err(PipelineError::TooManyFeaturesForShapley {
            got: m,
            max: MAX_SHAPLEY_FEATURES,
        });
    }
    if background.n_rows() == 0 {
        return Err(PipelineError::EmptyBackground);
    }
    for x in [rows, background] {
        if x.names() != model.feature_names.as_slice() {
            return Err(PipelineError::from(
                crate::learners::PredictError::ColumnMismatch {
                    expected: model.feature_names.clone(),
                    found: x.names().to_vec(),
                },
            ));
        }
    }

    let n_masks = 1usize << m;
    // Shapley kernel weight for a coalition of size s (excluding j):
    // s!(m-1-s)!/m! = 1 / (m * C(m-1, s))
    let weights: Vec<f64> = (0..m).map(|s| 1.0 / (m as f64 * binomial(m - 1, s))).collect();

    let attributions: Vec<RowAttribution> = (0..rows.n_rows())
        .into_par_iter()
        .map(|row_idx| {
            let x = rows.row(row_idx);
            let mut values = vec![0.0; n_masks];
            let mut composite = vec![0.0; m];
            for (mask, value) in values.iter_mut().enumerate() {
                let mut total = 0.0;
                for b in 0..background.n_rows() {
                    let source = background.row(b);
                    for j in 0..m {
                        composite[j] = if mask & (1 << j) != 0 { x[j] } else { source[j] };
                    }
                    total += model.predict_row(&composite);
                }
                *value = total / background.n_rows() as f64;
            }
            let mut attr = vec![0.0; m];
            for mask in 0..n_masks {
                for (j, attr_j) in attr.iter_mut().enumerate() {
                    if mask & (1 << j) == 0 {
                        let size = (mask as u32).count_ones() as usize;
                        *attr_j += weights[size] * (values[mask | (1 << j)] - values[mask]);
                    }
                }
            }
            RowAttribution {
                row: row_idx,
                prediction: values[n_masks - 1],
                attributions: attr,
            }
        })
        .collect();

    Ok(ShapleyResult {
        feature_names: rows.names().to_vec(),
        baseline: attributions
            .first()
            .map(|_| {
                // v(empty set) is row-independent; recompute once
                let mut total = 0.0;
                for b in 0..background.n_rows() {
                    total += model.predict_row(background.row(b));
                }
                total / background.n_rows() as f64
            })
            .unwrap_or(0.0),
        n_background: background.n_rows(),
        rows: attributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, LearnerSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_features(names: &[&str], n: usize, seed: u64) -> Features {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * names.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Features::new(names.iter().map(|s| s.to_string()).collect(), data, n)
    }

    #[test]
    fn linear_model_closed_form() {
        let names = ["a", "b", "c"];
        let x = random_features(&names, 40, 0);
        let w = [2.0, -1.5, 0.5];
        let y: Vec<f64> = (0..40)
            .map(|i| {
                let r = x.row(i);
                w[0] * r[0] + w[1] * r[1] + w[2] * r[2] + 0.3
            })
            .collect();
        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        let background = x.select_rows(&(0..15).collect::<Vec<_>>());
        let explained = x.select_rows(&[20, 21, 22]);
        let result = shapley(&model, &explained, &background).unwrap();
        let bg_mean: Vec<f64> = (0..3)
            .map(|j| background.column(j).iter().sum::<f64>() / 15.0)
            .collect();
        for row in &result.rows {
            let r = explained.row(row.row);
            for j in 0..3 {
                let want = w[j] * (r[j] - bg_mean[j]);
                assert!(
                    (row.attributions[j] - want).abs() < 1e-9,
                    "{} vs {want}",
                    row.attributions[j]
                );
            }
        }
    }

    #[test]
    fn efficiency_axiom_holds() {
        let names = ["a", "b", "c", "d"];
        let x = random_features(&names, 60, 1);
        let y: Vec<f64> = (0..60)
            .map(|i| {
                let r = x.row(i);
                (3.0 * r[0]).sin() + r[1] * r[2]
            })
            .collect();
        let model = train(&LearnerSpec::new("GB", 0), &x, &y).unwrap();
        let background = x.select_rows(&(0..20).collect::<Vec<_>>());
        let explained = x.select_rows(&(30..40).collect::<Vec<_>>());
        let result = shapley(&model, &explained, &background).unwrap();
        for row in &result.rows {
            let total: f64 = row.attributions.iter().sum();
            let direct = model.predict_row(explained.row(row.row));
            assert!((result.baseline + total - direct).abs() < 1e-9);
            assert!((row.prediction - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_model_attributes_nothing() {
        let names = ["a", "b"];
        let x = random_features(&names, 30, 2);
        let y = vec![4.2; 30];
        // a zero-shrinkage booster is constant everywhere
        let spec = LearnerSpec::new("GB", 0)
            .with("learning_rate", crate::learners::HyperValue::Float(0.0));
        let model = train(&spec, &x, &y).unwrap();
        let result = shapley(&model, &x.select_rows(&[0, 1]), &x.select_rows(&[5, 6, 7])).unwrap();
        // the model's constant is the fp mean of the targets
        let constant = model.predict_row(x.row(0));
        assert!((result.baseline - constant).abs() < 1e-12);
        for row in &result.rows {
            for a in &row.attributions {
                assert_eq!(*a, 0.0);
            }
        }
    }

    #[test]
    fn symmetric_features_get_equal_credit() {
        // prediction depends on a + b only, via hand-built coefficients
        use crate::learners::LinearModelState;
        let names = vec!["a".to_string(), "b".to_string()];
        let state = LinearModelState { coefficients: vec![1.0, 1.0], intercept: 0.0 };
        let x = random_features(&["a", "b"], 30, 3);
        let y: Vec<f64> = (0..30).map(|i| x.row(i)[0] + x.row(i)[1]).collect();
        let mut model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        // swap in the exact symmetric state
        model = TrainedModelBuilder::with_state(model, state, names);
        // identical background marginals: mirrored rows
        let background = Features::new(
            vec!["a".into(), "b".into()],
            vec![0.3, 0.3, -0.8, -0.8, 0.1, 0.1],
            3,
        );
        let explained = Features::new(vec!["a".into(), "b".into()], vec![0.55, 0.55], 1);
        let result = shapley(&model, &explained, &background).unwrap();
        let attr = &result.rows[0].attributions;
        assert!((attr[0] - attr[1]).abs() < 1e-9);
    }

    /// Test helper that swaps a hand-built state into a trained container.
    struct TrainedModelBuilder;

    impl TrainedModelBuilder {
        fn with_state(
            mut model: TrainedModel,
            state: crate::learners::LinearModelState,
            names: Vec<String>,
        ) -> TrainedModel {
            model.feature_names = names;
            model.standardization = None;
            model.state = std::sync::Arc::new(state);
            model
        }
    }

    #[test]
    fn feature_bound_is_enforced() {
        let names: Vec<String> = (0..21).map(|i| format!("f{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let x = random_features(&refs, 25, 4);
        let y: Vec<f64> = (0..25).map(|i| x.row(i)[0]).collect();
        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        assert!(matches!(
            shapley(&model, &x, &x),
            Err(PipelineError::TooManyFeaturesForShapley { got: 21, .. })
        ));
    }
}
