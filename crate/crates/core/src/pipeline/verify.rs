//! Predictive-ability checks: baseline comparisons, target scrambling,
//! coarse one-hot retraining and k-fold cross-validation.

use super::PipelineError;
use crate::data::{split, DataTable, Features, SplitConfig};
use crate::learners::{train, LearnerSpec};
use crate::metrics::{self, MetricsBundle};
use crate::seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KFoldResult {
    pub folds: Vec<MetricsBundle>,
    /// Metrics over the concatenated out-of-fold predictions.
    pub pooled: MetricsBundle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationResult {
    pub model_rmse: f64,
    /// RMSE of predicting the evaluation partition's own target mean, which
    /// equals that partition's target standard deviation.
    pub ymean_rmse: f64,
    /// RMSE after retraining on seeded-permuted targets.
    pub yshuffle_rmse: f64,
    /// RMSE after retraining with every numeric feature replaced by
    /// train-quartile one-hot bins.
    pub onehot_rmse: f64,
    pub kfold: KFoldResult,
    pub notes: Vec<String>,
}

/// Seeded k folds over 0..n: disjoint, exhaustive, sizes differing by at
/// most one.
pub fn k_folds(n: usize, k: usize, seed_value: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
    order.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = order[at..at + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        at += size;
    }
    folds
}

fn percentile_edges(sorted: &[f64]) -> [f64; 3] {
    let pick = |q: f64| {
        let rank = ((sorted.len() as f64) * q).ceil() as usize;
        sorted[rank.clamp(1, sorted.len()) - 1]
    };
    [pick(0.25), pick(0.50), pick(0.75)]
}

fn bin_of(v: f64, edges: &[f64; 3]) -> usize {
    if v <= edges[0] {
        0
    } else if v <= edges[1] {
        1
    } else if v <= edges[2] {
        2
    } else {
        3
    }
}

/// Replaces every feature with four quartile-bin indicators (edges from the
/// train partition). Indicator columns constant on the train partition are
/// dropped, since they carry no information and break linear solvers.
fn quartile_onehot(
    x_train: &Features,
    x_valid: &Features,
) -> (Features, Features) {
    let m = x_train.n_cols();
    let mut edges = Vec::with_capacity(m);
    for j in 0..m {
        let mut col = x_train.column(j);
        col.sort_by(|a, b| a.total_cmp(b));
        edges.push(percentile_edges(&col));
    }

    let mut names = Vec::new();
    let mut keep: Vec<(usize, usize)> = Vec::new();
    for j in 0..m {
        let mut bins: Vec<usize> = (0..4usize)
            .filter(|&b| {
                let hits = (0..x_train.n_rows())
                    .filter(|&i| bin_of(x_train.value(i, j), &edges[j]) == b)
                    .count();
                hits > 0 && hits < x_train.n_rows()
            })
            .collect();
        // the occupied indicators of one feature sum to 1; drop a reference
        // bin so the encoding is not collinear with an intercept
        if bins.len() >= 2 {
            bins.pop();
        }
        for b in bins {
            names.push(format!("{}#q{}", x_train.names()[j], b + 1));
            keep.push((j, b));
        }
    }
    let encode = |x: &Features| {
        let mut data = Vec::with_capacity(x.n_rows() * keep.len());
        for i in 0..x.n_rows() {
            for &(j, b) in &keep {
                let hit = bin_of(x.value(i, j), &edges[j]) == b;
                data.push(if hit { 1.0 } else { 0.0 });
            }
        }
        Features::new(names.clone(), data, x.n_rows())
    };
    (encode(x_train), encode(x_valid))
}

/// Runs the verification battery for one spec on one split.
///
/// `feature_names` restricts the predictor set (e.g. to a champion's
/// filtered features); `None` uses every feature.
pub fn verify(
    spec: &LearnerSpec,
    table: &DataTable,
    split_cfg: &SplitConfig,
    k: usize,
    feature_names: Option<&[String]>,
) -> Result<VerificationResult, PipelineError> {
    if k < 2 {
        return Err(PipelineError::InvalidConfig("k must be at least 2".into()));
    }
    let (train_idx, valid_idx) = split(table, split_cfg)?;
    let all = table.features();
    let features = match feature_names {
        None => all,
        Some(names) => all.select_columns(names)?,
    };
    let target = table.target();
    let x_train = features.select_rows(&train_idx);
    let x_valid = features.select_rows(&valid_idx);
    let y_train: Vec<f64> = train_idx.iter().map(|&i| target[i]).collect();
    let y_valid: Vec<f64> = valid_idx.iter().map(|&i| target[i]).collect();

    let model = train(spec, &x_train, &y_train)?;
    let model_rmse = metrics::rmse(&y_valid, &model.predict(&x_valid)?)?;

    let valid_mean = metrics::mean(&y_valid);
    let ymean_rmse = metrics::rmse(&y_valid, &vec![valid_mean; y_valid.len()])?;

    let yshuffle_rmse = {
        let mut shuffled = y_train.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(
            split_cfg.seed,
            &[seed::label("y-shuffle")],
        ));
        shuffled.shuffle(&mut rng);
        let scrambled = train(spec, &x_train, &shuffled)?;
        metrics::rmse(&y_valid, &scrambled.predict(&x_valid)?)?
    };

    let onehot_rmse = {
        let (bx_train, bx_valid) = quartile_onehot(&x_train, &x_valid);
        let binned = train(spec, &bx_train, &y_train)?;
        metrics::rmse(&y_valid, &binned.predict(&bx_valid)?)?
    };

    let kfold = run_k_folds(
        spec,
        &features,
        &target,
        k,
        seed::derive(split_cfg.seed, &[seed::label("kfold")]),
    )?;

    Ok(VerificationResult {
        model_rmse,
        ymean_rmse,
        yshuffle_rmse,
        onehot_rmse,
        kfold,
        notes: vec![
            "y-mean predicts the evaluation partition's own target mean (its RMSE equals \
             that partition's target SD)"
                .into(),
            "onehot test bins every feature into train-quartile indicators".into(),
            "k-fold metrics are computed on pooled out-of-fold predictions".into(),
        ],
    })
}

fn run_k_folds(
    spec: &LearnerSpec,
    features: &Features,
    target: &[f64],
    k: usize,
    seed_value: u64,
) -> Result<KFoldResult, PipelineError> {
    let n = features.n_rows();
    if n < 2 * k {
        return Err(PipelineError::InvalidConfig(format!(
            "{n} rows cannot support {k}-fold cross-validation"
        )));
    }
    let folds = k_folds(n, k, seed_value);
    let mut fold_bundles = Vec::with_capacity(k);
    let mut pooled_pred = vec![0.0; n];
    for fold in &folds {
        let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train_rows: Vec<usize> = (0..n).filter(|i| !in_fold.contains(i)).collect();
        let x_train = features.select_rows(&train_rows);
        let y_train: Vec<f64> = train_rows.iter().map(|&i| target[i]).collect();
        let x_fold = features.select_rows(fold);
        let y_fold: Vec<f64> = fold.iter().map(|&i| target[i]).collect();
        let model = train(spec, &x_train, &y_train)?;
        let predictions = model.predict(&x_fold)?;
        for (&row, &p) in fold.iter().zip(&predictions) {
            pooled_pred[row] = p;
        }
        fold_bundles.push(MetricsBundle::compute(&y_fold, &predictions)?);
    }
    let pooled = MetricsBundle::compute(target, &pooled_pred)?;
    Ok(KFoldResult { folds: fold_bundles, pooled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synth::{synth_dataset, SynthConfig};

    #[test]
    fn folds_partition_the_rows() {
        for (n, k) in [(23usize, 5usize), (25, 5), (11, 3)] {
            let folds = k_folds(n, k, 42);
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
            let max = sizes.iter().max().unwrap();
            let min = sizes.iter().min().unwrap();
            assert!(max - min <= 1);
        }
    }

    #[test]
    fn battery_orders_baselines_sanely() {
        let table = synth_dataset(&SynthConfig::default());
        let table = crate::data::normalize_target(&table).unwrap();
        let (table, _) = crate::data::curate(&table, &Default::default()).unwrap();
        let spec = LearnerSpec::new("RF", 0);
        let result = verify(&spec, &table, &SplitConfig::random(0.8, 0), 5, None).unwrap();
        // a real model beats both degenerate baselines on data with signal
        assert!(result.model_rmse < result.ymean_rmse);
        assert!(result.model_rmse < result.yshuffle_rmse);
        assert_eq!(result.kfold.folds.len(), 5);
        assert!(result.kfold.pooled.r2.unwrap() > 0.5);
    }

    #[test]
    fn ymean_equals_validation_target_sd() {
        let table = synth_dataset(&SynthConfig::default());
        let (table, _) = crate::data::curate(&table, &Default::default()).unwrap();
        let split_cfg = SplitConfig::random(0.7, 3);
        let spec = LearnerSpec::new("GB", 0)
            .with("trees", crate::learners::HyperValue::Int(20));
        let result = verify(&spec, &table, &split_cfg, 5, None).unwrap();
        let (_, valid_idx) = split(&table, &split_cfg).unwrap();
        let target = table.target();
        let y_valid: Vec<f64> = valid_idx.iter().map(|&i| target[i]).collect();
        let mean = metrics::mean(&y_valid);
        let sd = (y_valid.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / y_valid.len() as f64)
            .sqrt();
        assert!((result.ymean_rmse - sd).abs() <= 1e-9);
    }
}
