//! Error and goodness-of-fit statistics shared by every other module.
//!
//! All accumulation runs in double precision; sums over more than 1024 terms
//! use pairwise summation so accuracy does not degrade on large inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: observed has {observed} values, predicted has {predicted}")]
    LengthMismatch { observed: usize, predicted: usize },
    #[error("empty input: need at least one observation")]
    Empty,
    #[error("constant observed vector: total sum of squares is zero, R^2 is undefined")]
    ConstantObserved,
}

/// R², RMSE, SSE and MAE for one (model, data partition) pair.
///
/// `r2` is `None` when the observed vector is constant (zero total sum of
/// squares); the other metrics remain defined. Serialized as a flat object
/// `{r2, rmse, sse, mae, n}` with `null` for an undefined R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub r2: Option<f64>,
    pub rmse: f64,
    pub sse: f64,
    pub mae: f64,
    pub n: usize,
}

impl MetricsBundle {
    /// Computes all four metrics in one pass over the pair of vectors.
    pub fn compute(observed: &[f64], predicted: &[f64]) -> Result<Self, MetricsError> {
        check_lengths(observed, predicted)?;
        let n = observed.len();
        let sse = sse_unchecked(observed, predicted);
        let rmse = (sse / n as f64).sqrt();
        let mae = {
            let abs: Vec<f64> = observed
                .iter()
                .zip(predicted)
                .map(|(o, p)| (o - p).abs())
                .collect();
            pairwise_sum(&abs) / n as f64
        };
        let r2 = match ss_tot(observed) {
            ss if ss > 0.0 => Some(1.0 - sse / ss),
            _ => None,
        };
        Ok(MetricsBundle { r2, rmse, sse, mae, n })
    }
}

/// Pairwise (cascade) summation; naive accumulation below 1024 terms.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 1024 {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

fn check_lengths(observed: &[f64], predicted: &[f64]) -> Result<(), MetricsError> {
    if observed.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            observed: observed.len(),
            predicted: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Elementwise observed minus predicted.
pub fn residuals(observed: &[f64], predicted: &[f64]) -> Result<Vec<f64>, MetricsError> {
    check_lengths(observed, predicted)?;
    Ok(observed.iter().zip(predicted).map(|(o, p)| o - p).collect())
}

fn sse_unchecked(observed: &[f64], predicted: &[f64]) -> f64 {
    let squares: Vec<f64> = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p) * (o - p))
        .collect();
    pairwise_sum(&squares)
}

/// Sum of squared residuals.
pub fn sse(observed: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(observed, predicted)?;
    Ok(sse_unchecked(observed, predicted))
}

fn ss_tot(observed: &[f64]) -> f64 {
    let m = mean(observed);
    let squares: Vec<f64> = observed.iter().map(|y| (y - m) * (y - m)).collect();
    pairwise_sum(&squares)
}

/// Coefficient of determination `1 - SSE/SS_tot`. May be negative for bad
/// models; errors on a constant observed vector instead of returning NaN.
pub fn r2(observed: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(observed, predicted)?;
    let ss = ss_tot(observed);
    if ss <= 0.0 {
        return Err(MetricsError::ConstantObserved);
    }
    Ok(1.0 - sse_unchecked(observed, predicted) / ss)
}

/// Root mean squared error.
pub fn rmse(observed: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(observed, predicted)?;
    Ok((sse_unchecked(observed, predicted) / observed.len() as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(observed: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(observed, predicted)?;
    let abs: Vec<f64> = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p).abs())
        .collect();
    Ok(pairwise_sum(&abs) / observed.len() as f64)
}
