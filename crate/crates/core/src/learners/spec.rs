//! Learner specifications: family name, hyperparameter map, seed.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("unknown learner family '{0}'")]
    UnknownFamily(String),
    #[error("family {family} does not take a hyperparameter named '{name}'")]
    UnknownHyperparam { family: String, name: String },
    #[error("hyperparameter '{name}': {reason}")]
    BadHyperparam { name: String, reason: String },
    #[error("training needs at least {min} rows, got {rows}")]
    TooFewRows { rows: usize, min: usize },
    #[error("feature matrix has {rows} rows but target has {targets} values")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("training data contains non-finite values")]
    NonFiniteInput,
    #[error("design matrix is rank deficient; offending columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("training diverged to a non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("every candidate spec failed; first failure: {first}")]
    AllCandidatesFailed { first: String },
}

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("feature columns do not match the model: expected [{}], got [{}]",
        expected.join(", "), found.join(", "))]
    ColumnMismatch { expected: Vec<String>, found: Vec<String> },
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("model document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    Version(u64),
    #[error("model document field '{0}' is missing or malformed")]
    BadField(&'static str),
    #[error("unknown learner family '{0}'")]
    UnknownFamily(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A single hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

pub type HyperParams = BTreeMap<String, HyperValue>;

/// Algorithm family plus a complete hyperparameter assignment and the
/// training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: String,
    pub hyperparams: HyperParams,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(family: &str, seed: u64) -> Self {
        LearnerSpec { family: family.to_string(), hyperparams: HyperParams::new(), seed }
    }

    pub fn with(mut self, name: &str, value: HyperValue) -> Self {
        self.hyperparams.insert(name.to_string(), value);
        self
    }

    /// Compact text like `RF(max_depth=none, min_leaf=1, ...)`.
    pub fn describe(&self) -> String {
        let params: Vec<String> = self
            .hyperparams
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    HyperValue::Bool(b) => b.to_string(),
                    HyperValue::Int(i) => i.to_string(),
                    HyperValue::Float(f) => format!("{f}"),
                    HyperValue::Text(t) => t.clone(),
                };
                format!("{k}={v}")
            })
            .collect();
        format!("{}({})", self.family, params.join(", "))
    }
}

pub(crate) fn get_usize(params: &HyperParams, name: &str) -> Result<usize, TrainError> {
    match params.get(name) {
        Some(HyperValue::Int(v)) if *v >= 0 => Ok(*v as usize),
        Some(other) => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: format!("expected a non-negative integer, got {other:?}"),
        }),
        None => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: "missing after defaulting".to_string(),
        }),
    }
}

pub(crate) fn get_f64(params: &HyperParams, name: &str) -> Result<f64, TrainError> {
    match params.get(name) {
        Some(HyperValue::Float(v)) => Ok(*v),
        Some(HyperValue::Int(v)) => Ok(*v as f64),
        Some(other) => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: format!("expected a number, got {other:?}"),
        }),
        None => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: "missing after defaulting".to_string(),
        }),
    }
}

pub(crate) fn get_bool(params: &HyperParams, name: &str) -> Result<bool, TrainError> {
    match params.get(name) {
        Some(HyperValue::Bool(v)) => Ok(*v),
        Some(other) => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: format!("expected true/false, got {other:?}"),
        }),
        None => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: "missing after defaulting".to_string(),
        }),
    }
}

/// "none" or a non-negative integer.
pub(crate) fn get_optional_depth(
    params: &HyperParams,
    name: &str,
) -> Result<Option<usize>, TrainError> {
    match params.get(name) {
        Some(HyperValue::Text(t)) if t == "none" => Ok(None),
        Some(HyperValue::Int(v)) if *v >= 1 => Ok(Some(*v as usize)),
        Some(other) => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: format!("expected \"none\" or a positive integer, got {other:?}"),
        }),
        None => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: "missing after defaulting".to_string(),
        }),
    }
}

pub(crate) fn get_text<'p>(params: &'p HyperParams, name: &str) -> Result<&'p str, TrainError> {
    match params.get(name) {
        Some(HyperValue::Text(t)) => Ok(t.as_str()),
        Some(other) => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: format!("expected text, got {other:?}"),
        }),
        None => Err(TrainError::BadHyperparam {
            name: name.to_string(),
            reason: "missing after defaulting".to_string(),
        }),
    }
}
