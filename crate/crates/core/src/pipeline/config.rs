//! Benchmark sweep configuration.

use super::PipelineError;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_families() -> Vec<String> {
    vec!["MVL".into(), "RF".into(), "GB".into(), "NN".into()]
}

fn default_fractions() -> Vec<f64> {
    vec![0.6, 0.7, 0.8, 0.9]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_pfi_variants() -> Vec<bool> {
    vec![false, true]
}

fn default_cutoffs() -> Vec<f64> {
    vec![30.0, 60.0, 90.0, 120.0, 150.0, 180.0]
}

fn default_budget() -> usize {
    16
}

fn default_pfi_filter_fraction() -> f64 {
    0.04
}

fn default_pfi_repeats() -> usize {
    10
}

fn default_k_folds() -> usize {
    5
}

fn default_outlier_z() -> f64 {
    2.0
}

fn default_shapley_rows() -> usize {
    50
}

fn default_shapley_background() -> usize {
    32
}

fn default_true() -> bool {
    true
}

/// Axes and knobs of the benchmark sweep; loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default = "default_fractions")]
    pub train_fractions: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Which feature-filter variants to run: `false` keeps all descriptors,
    /// `true` re-trains on the top permutation-importance features.
    #[serde(default = "default_pfi_variants")]
    pub pfi_variants: Vec<bool>,
    #[serde(default = "default_cutoffs")]
    pub time_cutoffs: Vec<f64>,
    #[serde(default = "default_budget")]
    pub search_budget: usize,
    /// A feature survives filtering when its importance reaches this
    /// fraction of the maximum importance.
    #[serde(default = "default_pfi_filter_fraction")]
    pub pfi_filter_fraction: f64,
    #[serde(default = "default_pfi_repeats")]
    pub pfi_repeats: usize,
    #[serde(default = "default_k_folds")]
    pub k_folds: usize,
    #[serde(default = "default_outlier_z")]
    pub outlier_z: f64,
    #[serde(default = "default_shapley_rows")]
    pub shapley_rows: usize,
    #[serde(default = "default_shapley_background")]
    pub shapley_background: usize,
    #[serde(default = "default_true")]
    pub include_verification: bool,
    #[serde(default = "default_true")]
    pub include_attribution: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields default")
    }
}

impl BenchmarkConfig {
    /// Checks the axes and normalizes cutoff order.
    pub fn validate(&mut self) -> Result<(), PipelineError> {
        if self.families.is_empty() {
            return Err(PipelineError::InvalidConfig("families must be non-empty".into()));
        }
        for f in &self.families {
            if crate::learners::family(f).is_none() {
                return Err(PipelineError::InvalidConfig(format!(
                    "unknown learner family '{f}'"
                )));
            }
        }
        if self.train_fractions.is_empty() {
            return Err(PipelineError::InvalidConfig("train_fractions must be non-empty".into()));
        }
        for &f in &self.train_fractions {
            if !(f > 0.0 && f < 1.0) {
                return Err(PipelineError::InvalidConfig(format!(
                    "train fraction {f} outside (0, 1)"
                )));
            }
        }
        if self.seeds.is_empty() {
            return Err(PipelineError::InvalidConfig("seeds must be non-empty".into()));
        }
        if self.pfi_variants.is_empty() {
            return Err(PipelineError::InvalidConfig("pfi_variants must be non-empty".into()));
        }
        if self.time_cutoffs.is_empty() {
            return Err(PipelineError::InvalidConfig("time_cutoffs must be non-empty".into()));
        }
        self.time_cutoffs.sort_by(|a, b| a.total_cmp(b));
        self.time_cutoffs.dedup();
        if self.search_budget == 0 {
            return Err(PipelineError::InvalidConfig("search_budget must be at least 1".into()));
        }
        if self.k_folds < 2 {
            return Err(PipelineError::InvalidConfig("k_folds must be at least 2".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        let mut config: BenchmarkConfig = toml::from_str(text)
            .map_err(|e| PipelineError::InvalidConfig(format!("toml parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let mut config = BenchmarkConfig::default();
        assert!(config.validate().is_ok());
        assert_eq!(config.families.len(), 4);
        assert_eq!(config.time_cutoffs.last(), Some(&180.0));
    }

    #[test]
    fn toml_overrides_fields() {
        let config = BenchmarkConfig::from_toml_str(
            "families = [\"RF\"]\ntrain_fractions = [0.8]\ntime_cutoffs = [180.0]\nsearch_budget = 2\n",
        )
        .unwrap();
        assert_eq!(config.families, vec!["RF"]);
        assert_eq!(config.search_budget, 2);
        assert_eq!(config.pfi_variants, vec![false, true]);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(BenchmarkConfig::from_toml_str("families = []").is_err());
        assert!(BenchmarkConfig::from_toml_str("families = [\"XGB\"]").is_err());
        assert!(BenchmarkConfig::from_toml_str("train_fractions = [1.5]").is_err());
        assert!(BenchmarkConfig::from_toml_str("unknown_knob = 3").is_err());
    }

    #[test]
    fn cutoffs_are_normalized_ascending() {
        let config =
            BenchmarkConfig::from_toml_str("time_cutoffs = [180.0, 30.0, 90.0, 30.0]").unwrap();
        assert_eq!(config.time_cutoffs, vec![30.0, 90.0, 180.0]);
    }
}
