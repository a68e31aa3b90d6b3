//! Residual-based outlier flagging.

use super::PipelineError;
use crate::data::Features;
use crate::learners::TrainedModel;

/// Rows whose residual sits more than `z_threshold` sample standard
/// deviations from the mean residual, sorted by |z| descending. A perfect
/// fit (zero residual spread) flags nothing.
pub fn detect_outliers(
    model: &TrainedModel,
    x: &Features,
    y: &[f64],
    z_threshold: f64,
) -> Result<Vec<(usize, f64)>, PipelineError> {
    if x.n_rows() < 3 {
        return Err(PipelineError::TooFewRowsForOutliers { rows: x.n_rows() });
    }
    let predictions = model.predict(x).map_err(PipelineError::from)?;
    let residuals: Vec<f64> = y.iter().zip(&predictions).map(|(o, p)| o - p).collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let sd = (residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Ok(Vec::new());
    }
    let mut flagged: Vec<(usize, f64)> = residuals
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r - mean) / sd))
        .filter(|(_, z)| z.abs() > z_threshold)
        .collect();
    flagged.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    Ok(flagged)
}
