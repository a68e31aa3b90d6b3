//! The trained-model container and its versioned JSON persistence.

use super::spec::{LearnerSpec, PersistError, PredictError};
use super::FittedState;
use crate::data::Features;
use crate::metrics::MetricsBundle;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

const FORMAT_VERSION: u64 = 1;

/// Per-feature (and optionally target) mean/SD captured at training time so
/// prediction is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
    pub target_mean: Option<f64>,
    pub target_sd: Option<f64>,
}

impl Standardization {
    pub fn from_training(x: &Features, y: Option<&[f64]>) -> Self {
        let n = x.n_rows() as f64;
        let mut feature_means = Vec::with_capacity(x.n_cols());
        let mut feature_sds = Vec::with_capacity(x.n_cols());
        for j in 0..x.n_cols() {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            feature_means.push(mean);
            feature_sds.push(var.sqrt());
        }
        let (target_mean, target_sd) = match y {
            None => (None, None),
            Some(y) => {
                let mean = y.iter().sum::<f64>() / n;
                let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                (Some(mean), Some(var.sqrt()))
            }
        };
        Standardization { feature_means, feature_sds, target_mean, target_sd }
    }

    /// Constant columns map to 0 instead of dividing by zero.
    pub fn standardize_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.feature_means.iter().zip(&self.feature_sds))
            .map(|(v, (mean, sd))| if *sd > 0.0 { (v - mean) / sd } else { 0.0 })
            .collect()
    }

    pub fn standardize_target(&self, v: f64) -> f64 {
        match (self.target_mean, self.target_sd) {
            (Some(mean), Some(sd)) if sd > 0.0 => (v - mean) / sd,
            (Some(mean), Some(_)) => v - mean,
            _ => v,
        }
    }

    pub fn unstandardize_target(&self, v: f64) -> f64 {
        match (self.target_mean, self.target_sd) {
            (Some(mean), Some(sd)) => v * sd + mean,
            _ => v,
        }
    }
}

/// A fitted predictor: spec, the exact feature layout it accepts, optional
/// standardization, the family-specific state and training diagnostics.
#[derive(Clone)]
pub struct TrainedModel {
    pub spec: LearnerSpec,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization>,
    pub training_metrics: MetricsBundle,
    /// Group labels seen during training; drives the external-test leakage
    /// guard. Empty when the table had no group column.
    pub training_groups: BTreeSet<String>,
    pub(crate) state: Arc<dyn FittedState>,
}

impl std::fmt::Debug for TrainedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainedModel")
            .field("spec", &self.spec)
            .field("feature_names", &self.feature_names)
            .field("training_metrics", &self.training_metrics)
            .finish_non_exhaustive()
    }
}

impl TrainedModel {
    pub fn state(&self) -> &dyn FittedState {
        self.state.as_ref()
    }

    /// Predicts one row that is already in the model's column order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.standardization {
            None => self.state.predict_row(row),
            Some(s) => {
                let z = s.standardize_row(row);
                s.unstandardize_target(self.state.predict_row(&z))
            }
        }
    }

    /// Predicts every row after checking that the feature columns match the
    /// training layout exactly (names and order).
    pub fn predict(&self, x: &Features) -> Result<Vec<f64>, PredictError> {
        if x.names() != self.feature_names.as_slice() {
            return Err(PredictError::ColumnMismatch {
                expected: self.feature_names.clone(),
                found: x.names().to_vec(),
            });
        }
        Ok((0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    /// Versioned JSON document; loading it reproduces predictions
    /// bit-identically.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format_version": FORMAT_VERSION,
            "spec": self.spec,
            "feature_names": self.feature_names,
            "standardization": self.standardization,
            "family_state": self.state.state_json(),
            "training_metrics": self.training_metrics,
            "training_groups": self.training_groups,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("model serializes")
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<TrainedModel, PersistError> {
        let version = doc
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or(PersistError::BadField("format_version"))?;
        if version != FORMAT_VERSION {
            return Err(PersistError::Version(version));
        }
        let spec: LearnerSpec = serde_json::from_value(
            doc.get("spec").cloned().ok_or(PersistError::BadField("spec"))?,
        )?;
        let feature_names: Vec<String> = serde_json::from_value(
            doc.get("feature_names")
                .cloned()
                .ok_or(PersistError::BadField("feature_names"))?,
        )?;
        let standardization: Option<Standardization> =
            serde_json::from_value(doc.get("standardization").cloned().unwrap_or_default())?;
        let training_metrics: MetricsBundle = serde_json::from_value(
            doc.get("training_metrics")
                .cloned()
                .ok_or(PersistError::BadField("training_metrics"))?,
        )?;
        let training_groups: BTreeSet<String> =
            serde_json::from_value(doc.get("training_groups").cloned().unwrap_or_default())?;
        let family = super::family(&spec.family)
            .ok_or_else(|| PersistError::UnknownFamily(spec.family.clone()))?;
        let state = family.load_state(
            doc.get("family_state").ok_or(PersistError::BadField("family_state"))?,
        )?;
        Ok(TrainedModel {
            spec,
            feature_names,
            standardization,
            training_metrics,
            training_groups,
            state,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        std::fs::write(path, self.to_json_string()).map_err(|source| PersistError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<TrainedModel, PersistError> {
        let text = std::fs::read_to_string(path).map_err(|source| PersistError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let doc: serde_json::Value = serde_json::from_str(&text)?;
        TrainedModel::from_json(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, HyperValue, LearnerSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize) -> (Features, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.gen_range(0.0..1.0);
            let b: f64 = rng.gen_range(0.0..1.0);
            rows.extend_from_slice(&[a, b]);
            y.push((a * 6.0).sin() + b);
        }
        (Features::new(vec!["a".into(), "b".into()], rows, n), y)
    }

    #[test]
    fn round_trip_is_bit_identical_for_every_family() {
        let (x, y) = data(40);
        for spec in [
            LearnerSpec::new("MVL", 0),
            LearnerSpec::new("RF", 0).with("trees", HyperValue::Int(20)),
            LearnerSpec::new("GB", 0).with("trees", HyperValue::Int(20)),
            LearnerSpec::new("NN", 0).with("epochs", HyperValue::Int(200)),
        ] {
            let model = train(&spec, &x, &y).unwrap();
            let text = model.to_json_string();
            let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
            let loaded = TrainedModel::from_json(&doc).unwrap();
            let a = model.predict(&x).unwrap();
            let b = loaded.predict(&x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert_eq!(p.to_bits(), q.to_bits(), "family {}", spec.family);
            }
        }
    }

    #[test]
    fn column_mismatch_is_rejected() {
        let (x, y) = data(20);
        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        let swapped = x.select_columns(&["b".into(), "a".into()]).unwrap();
        assert!(matches!(
            model.predict(&swapped),
            Err(PredictError::ColumnMismatch { .. })
        ));
    }

    #[test]
    fn version_gate() {
        let (x, y) = data(20);
        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        let mut doc = model.to_json();
        doc["format_version"] = serde_json::json!(99);
        assert!(matches!(TrainedModel::from_json(&doc), Err(PersistError::Version(99))));
    }
}
