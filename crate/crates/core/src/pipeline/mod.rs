//! End-to-end benchmark pipeline: curate → generate → predict → verify →
//! report, plus the synthetic-dataset generator used when no laboratory
//! CSV is available.

mod benchmark;
mod config;
mod outliers;
mod report;
mod shapley;
mod svg;
mod synth;
mod verify;

pub use benchmark::{
    cut_by_time, external_test, run_benchmark, Attribution, BenchmarkOutcome, BenchmarkReport,
    ChampionSummary, CutoffChampions, DatasetSummary, ExternalTestResult, OutlierRecord,
    PredictionRow, SweepEntry,
};
pub use config::BenchmarkConfig;
pub use outliers::detect_outliers;
pub use report::{render_markdown, write_artifacts};
pub use shapley::{shapley, RowAttribution, ShapleyResult, MAX_SHAPLEY_FEATURES};
pub use svg::{bar_chart_svg, scatter_svg};
pub use synth::{default_schedule, synth_columns, synth_dataset, SynthConfig};
pub use verify::{k_folds, verify, KFoldResult, VerificationResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Train(#[from] crate::learners::TrainError),
    #[error(transparent)]
    Predict(#[from] crate::learners::PredictError),
    #[error(transparent)]
    Persist(#[from] crate::learners::PersistError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("empty cutoff window: no rows at or before day {cutoff} (earliest is {earliest})")]
    EmptyCutoffWindow { cutoff: f64, earliest: f64 },
    #[error("no sweep entry succeeded at cutoff {cutoff}; cannot select a champion")]
    NoChampion { cutoff: f64 },
    #[error("{got} features exceed the exact Shapley enumeration bound of {max}; use permutation importance instead")]
    TooManyFeaturesForShapley { got: usize, max: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("outlier detection needs at least 3 rows, got {rows}")]
    TooFewRowsForOutliers { rows: usize },
    #[error("group '{group}' was part of the model's training data; pass allow-leakage to evaluate anyway")]
    LeakageGuard { group: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report document malformed: {0}")]
    BadReport(String),
}
