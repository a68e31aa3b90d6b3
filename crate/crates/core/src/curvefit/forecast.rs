//! Windowed fit-and-forecast protocol: fit on data up to a day cutoff,
//! score the prediction on later intervals.

use super::lm::{fit, FitError, FitOptions, FitResult};
use super::models::CurveKind;
use crate::metrics::MetricsBundle;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One device's (day, value) measurements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceSeries {
    pub device: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Forecast quality for one (device, window, horizon) combination: the model
/// was fitted on x <= window and scored on window < x <= horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastCell {
    pub device: String,
    pub window: f64,
    pub horizon: f64,
    pub metrics: MetricsBundle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowFit {
    pub device: String,
    pub window: f64,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastTable {
    pub kind: CurveKind,
    pub cells: Vec<ForecastCell>,
    pub fits: Vec<WindowFit>,
}

/// Runs the window/horizon sweep for every device. Horizons at or below a
/// window are skipped; a horizon interval that contains no points is an
/// error. Jobs run in parallel, output order is (device, window, horizon).
pub fn forecast_experiment(
    kind: CurveKind,
    series: &[DeviceSeries],
    windows: &[f64],
    horizons: &[f64],
    opts: &FitOptions,
) -> Result<ForecastTable, FitError> {
    let needed = kind.model().coeff_count();
    let mut jobs = Vec::new();
    for s in series {
        if s.x.is_empty() {
            return Err(FitError::EmptySeries(s.device.clone()));
        }
        for &w in windows {
            jobs.push((s, w));
        }
    }

    let results: Vec<Result<(WindowFit, Vec<ForecastCell>), FitError>> = jobs
        .par_iter()
        .map(|&(s, window)| {
            let in_window: Vec<usize> =
                (0..s.x.len()).filter(|&i| s.x[i] <= window).collect();
            if in_window.len() < needed {
                return Err(FitError::WindowTooSmall {
                    kind,
                    window,
                    needed,
                    got: in_window.len(),
                });
            }
            let wx: Vec<f64> = in_window.iter().map(|&i| s.x[i]).collect();
            let wy: Vec<f64> = in_window.iter().map(|&i| s.y[i]).collect();
            let fitted = fit(kind, &wx, &wy, None, opts)?;

            let mut cells = Vec::new();
            for &horizon in horizons {
                if horizon <= window {
                    continue;
                }
                let span: Vec<usize> = (0..s.x.len())
                    .filter(|&i| s.x[i] > window && s.x[i] <= horizon)
                    .collect();
                if span.is_empty() {
                    return Err(FitError::EmptyHorizonInterval { window, horizon });
                }
                let hx: Vec<f64> = span.iter().map(|&i| s.x[i]).collect();
                let hy: Vec<f64> = span.iter().map(|&i| s.y[i]).collect();
                let predicted = fitted.model.eval(&hx);
                cells.push(ForecastCell {
                    device: s.device.clone(),
                    window,
                    horizon,
                    metrics: MetricsBundle::compute(&hy, &predicted)?,
                });
            }
            let wf = WindowFit { device: s.device.clone(), window, fit: fitted };
            Ok((wf, cells))
        })
        .collect();

    let mut fits = Vec::new();
    let mut cells = Vec::new();
    for r in results {
        let (wf, mut c) = r?;
        fits.push(wf);
        cells.append(&mut c);
    }
    Ok(ForecastTable { kind, cells, fits })
}

impl ForecastTable {
    /// Aligned-column markdown mirroring the fitting-data / prediction
    /// layout, one table per device, plus the across-device mean and SD per
    /// (window, horizon) when several devices are present (flagged as an
    /// interpretation, since the aggregation protocol is a choice).
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("## {} forecast\n\n", self.kind));
        let mut devices: Vec<&str> = self.cells.iter().map(|c| c.device.as_str()).collect();
        devices.dedup();
        for device in &devices {
            out.push_str(&format!("### {device}\n\n"));
            out.push_str("| Fitting data | Prediction | RMSE | SSE | MAE |\n");
            out.push_str("|---:|---:|---:|---:|---:|\n");
            let mut last_window = f64::NAN;
            for cell in self.cells.iter().filter(|c| c.device == *device) {
                let label = if cell.window == last_window {
                    String::new()
                } else {
                    last_window = cell.window;
                    format!("{} days", cell.window)
                };
                out.push_str(&format!(
                    "| {label} | {} days | {:.4} | {:.4} | {:.4} |\n",
                    cell.horizon, cell.metrics.rmse, cell.metrics.sse, cell.metrics.mae
                ));
            }
            out.push('\n');
        }
        if devices.len() > 1 {
            out.push_str("### Across devices (mean ± SD of RMSE; interpretation)\n\n");
            out.push_str("| Fitting data | Prediction | mean RMSE | SD |\n");
            out.push_str("|---:|---:|---:|---:|\n");
            let mut keys: Vec<(f64, f64)> =
                self.cells.iter().map(|c| (c.window, c.horizon)).collect();
            keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            keys.dedup();
            for (w, h) in keys {
                let vals: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.window == w && c.horizon == h)
                    .map(|c| c.metrics.rmse)
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / vals.len() as f64)
                    .sqrt();
                out.push_str(&format!("| {w} days | {h} days | {mean:.4} | {sd:.4} |\n"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvefit::models::ParametricModel;

    fn decay_series(device: &str) -> DeviceSeries {
        let truth =
            ParametricModel::new(CurveKind::Gauss2, vec![0.6, 0.0, 90.0, 0.4, 0.0, 260.0])
                .unwrap();
        let x: Vec<f64> = (0..61).map(|i| i as f64 * 3.0).collect();
        let y = truth.eval(&x);
        DeviceSeries { device: device.to_string(), x, y }
    }

    #[test]
    fn layout_is_window_then_horizon() {
        let series = [decay_series("CellA")];
        let t = forecast_experiment(
            CurveKind::Gauss2,
            &series,
            &[90.0, 120.0],
            &[120.0, 150.0, 180.0],
            &FitOptions::default(),
        )
        .unwrap();
        let got: Vec<(f64, f64)> = t.cells.iter().map(|c| (c.window, c.horizon)).collect();
        assert_eq!(
            got,
            vec![(90.0, 120.0), (90.0, 150.0), (90.0, 180.0), (120.0, 150.0), (120.0, 180.0)]
        );
        assert_eq!(t.fits.len(), 2);
    }

    #[test]
    fn empty_horizon_interval_is_error() {
        let series = [decay_series("CellA")];
        let err = forecast_experiment(
            CurveKind::Gauss2,
            &series,
            &[180.0],
            &[181.0],
            &FitOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, FitError::EmptyHorizonInterval { .. }));
    }

    #[test]
    fn window_without_enough_points_is_error() {
        let series = [decay_series("CellA")];
        let err = forecast_experiment(
            CurveKind::Gauss2,
            &series,
            &[9.0],
            &[180.0],
            &FitOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, FitError::WindowTooSmall { .. }));
    }
}
