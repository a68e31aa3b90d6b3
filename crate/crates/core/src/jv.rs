//! Extraction of electrical parameters and PCE from raw J-V sweep curves.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JvError {
    #[error("curve needs at least 3 samples, got {0}")]
    TooShort(usize),
    #[error("voltage and current vectors differ in length ({voltage} vs {current})")]
    LengthMismatch { voltage: usize, current: usize },
    #[error("voltage samples must be strictly increasing (violated at index {0})")]
    NonMonotoneVoltage(usize),
    #[error("irradiance must be positive, got {0}")]
    BadIrradiance(f64),
    #[error("curve does not include or bracket V = 0; short-circuit current is undefined")]
    NoShortCircuitSample,
    #[error("current never crosses zero: degraded or dead cell, no open-circuit voltage")]
    NoZeroCrossing,
    #[error("no power-producing quadrant: every sampled power is non-positive")]
    NoPowerQuadrant,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path} line {line}: expected two numeric cells")]
    BadRow { path: String, line: u64 },
    #[error("file name '{0}' does not match the <cell>_<day>.csv pattern")]
    BadFileName(String),
}

/// Sign convention of the raw sweep. Lab files differ: many record the
/// photocurrent as negative (fourth quadrant), some as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    PhotocurrentNegative,
    PhotocurrentPositive,
}

/// One measured J-V sweep. Voltage in volts, current density in mA/cm²,
/// irradiance in mW/cm².
#[derive(Debug, Clone, PartialEq)]
pub struct JvCurve {
    voltage: Vec<f64>,
    current_density: Vec<f64>,
    irradiance: f64,
}

impl JvCurve {
    pub fn new(voltage: Vec<f64>, current_density: Vec<f64>, irradiance: f64) -> Result<Self, JvError> {
        if voltage.len() != current_density.len() {
            return Err(JvError::LengthMismatch {
                voltage: voltage.len(),
                current: current_density.len(),
            });
        }
        if voltage.len() < 3 {
            return Err(JvError::TooShort(voltage.len()));
        }
        for i in 1..voltage.len() {
            if voltage[i] <= voltage[i - 1] {
                return Err(JvError::NonMonotoneVoltage(i));
            }
        }
        if !(irradiance > 0.0) {
            return Err(JvError::BadIrradiance(irradiance));
        }
        Ok(JvCurve { voltage, current_density, irradiance })
    }

    pub fn irradiance(&self) -> f64 {
        self.irradiance
    }
}

/// The standard electrical parameters of a cell. `pce` is stored as a
/// fraction; reports format it as a percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub jsc: f64,
    pub voc: f64,
    pub pmpp: f64,
    pub ff: f64,
    pub pce: f64,
}

fn interpolate(x0: f64, y0: f64, x1: f64, y1: f64, x: f64) -> f64 {
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Extracts J_sc, V_oc, P_mpp, FF and PCE from a sweep.
///
/// J_sc is the current magnitude at V = 0 (linear interpolation between the
/// bracketing samples), V_oc the zero crossing of the current, and P_mpp the
/// sampled power maximum refined by parabolic interpolation over the maximal
/// sample and its neighbors — sweep steps are coarse, so the raw sample
/// maximum underestimates the true peak.
pub fn extract_params(curve: &JvCurve, convention: SignConvention) -> Result<CellParams, JvError> {
    let v = &curve.voltage;
    // work in the convention where the photocurrent is positive
    let j: Vec<f64> = match convention {
        SignConvention::PhotocurrentNegative => curve.current_density.iter().map(|x| -x).collect(),
        SignConvention::PhotocurrentPositive => curve.current_density.clone(),
    };
    let n = v.len();

    // J at V = 0: exact sample hit or interpolation between brackets
    let jsc = if let Some(k) = v.iter().position(|&x| x == 0.0) {
        j[k]
    } else {
        let k = (1..n)
            .find(|&i| v[i - 1] < 0.0 && v[i] > 0.0)
            .ok_or(JvError::NoShortCircuitSample)?;
        interpolate(v[k - 1], j[k - 1], v[k], j[k], 0.0)
    };

    // V at J = 0: first sign change from positive to non-positive
    let voc = {
        let mut found = None;
        for i in 1..n {
            if j[i - 1] > 0.0 && j[i] <= 0.0 {
                found = Some(if j[i] == 0.0 {
                    v[i]
                } else {
                    interpolate(j[i - 1], v[i - 1], j[i], v[i], 0.0)
                });
                break;
            }
        }
        found.ok_or(JvError::NoZeroCrossing)?
    };

    // sampled power in the generating quadrant
    let power: Vec<f64> = v.iter().zip(&j).map(|(vi, ji)| vi * ji).collect();
    let quadrant: Vec<usize> = (0..n)
        .filter(|&i| v[i] >= 0.0 && v[i] <= voc && power[i] > 0.0)
        .collect();
    let &peak = quadrant
        .iter()
        .max_by(|&&a, &&b| power[a].total_cmp(&power[b]))
        .ok_or(JvError::NoPowerQuadrant)?;

    let pmpp = if peak == 0 || peak == n - 1 {
        power[peak]
    } else {
        parabolic_peak(
            v[peak - 1], power[peak - 1],
            v[peak], power[peak],
            v[peak + 1], power[peak + 1],
        )
        .max(power[peak])
    };

    let ff = pmpp / (jsc * voc);
    let pce = pmpp / curve.irradiance;
    Ok(CellParams { jsc, voc, pmpp, ff, pce })
}

/// Value at the vertex of the parabola through three points.
fn parabolic_peak(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let d0 = (x0 - x1) * (x0 - x2);
    let d1 = (x1 - x0) * (x1 - x2);
    let d2 = (x2 - x0) * (x2 - x1);
    let a = y0 / d0 + y1 / d1 + y2 / d2;
    let b = -(y0 * (x1 + x2) / d0 + y1 * (x0 + x2) / d1 + y2 * (x0 + x1) / d2);
    let c = y0 * x1 * x2 / d0 + y1 * x0 * x2 / d1 + y2 * x0 * x1 / d2;
    if a >= 0.0 {
        // degenerate: not a maximum, keep the sampled value
        return y1;
    }
    let xv = -b / (2.0 * a);
    a * xv * xv + b * xv + c
}

/// Reads a two-column (voltage, current_density) CSV with a mandatory
/// header row; column names are not interpreted.
pub fn load_jv_csv(path: &Path, irradiance: f64) -> Result<JvCurve, JvError> {
    let file = std::fs::File::open(path).map_err(|source| JvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut voltage = Vec::new();
    let mut current = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = || JvError::BadRow { path: path.display().to_string(), line };
        if record.len() != 2 {
            return Err(bad());
        }
        voltage.push(record[0].parse::<f64>().map_err(|_| bad())?);
        current.push(record[1].parse::<f64>().map_err(|_| bad())?);
    }
    JvCurve::new(voltage, current, irradiance)
}

/// One extracted measurement in a batch directory.
#[derive(Debug, Clone, Serialize)]
pub struct BatchRecord {
    pub cell: String,
    pub day: f64,
    pub params: CellParams,
}

/// Processes a directory of `<cell>_<day>.csv` sweeps; results are ordered
/// by (cell, day) regardless of directory iteration order.
pub fn batch_extract(
    dir: &Path,
    irradiance: f64,
    convention: SignConvention,
) -> Result<Vec<BatchRecord>, JvError> {
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| JvError::Io { path: dir.display().to_string(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();

    let mut records = Vec::new();
    for path in files {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| JvError::BadFileName(path.display().to_string()))?;
        let (cell, day_text) = stem
            .rsplit_once('_')
            .ok_or_else(|| JvError::BadFileName(stem.to_string()))?;
        let day: f64 = day_text
            .parse()
            .map_err(|_| JvError::BadFileName(stem.to_string()))?;
        let curve = load_jv_csv(&path, irradiance)?;
        let params = extract_params(&curve, convention)?;
        records.push(BatchRecord { cell: cell.to_string(), day, params });
    }
    records.sort_by(|a, b| a.cell.cmp(&b.cell).then(a.day.total_cmp(&b.day)));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// J(V) = 10 (1 - V/0.5): jsc = 10, voc = 0.5, pmpp = 1.25 at V = 0.25.
    fn linear_curve(scale: f64) -> JvCurve {
        let voltage: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let current: Vec<f64> = voltage.iter().map(|v| scale * 10.0 * (1.0 - v / 0.5)).collect();
        JvCurve::new(voltage, current, 100.0).unwrap()
    }

    #[test]
    fn linear_curve_closed_form() {
        let p = extract_params(&linear_curve(1.0), SignConvention::PhotocurrentPositive).unwrap();
        assert!((p.jsc - 10.0).abs() < 1e-12);
        assert!((p.voc - 0.5).abs() < 1e-12);
        assert!((p.pmpp - 1.25).abs() < 1e-12);
        assert!((p.ff - 0.25).abs() < 1e-12);
        assert!((p.pce - 0.0125).abs() < 1e-12);
    }

    #[test]
    fn exact_sample_at_zero_volts() {
        let curve = JvCurve::new(
            vec![0.0, 0.2, 0.4, 0.6],
            vec![-12.0, -8.0, -3.0, 2.0],
            100.0,
        )
        .unwrap();
        let p = extract_params(&curve, SignConvention::PhotocurrentNegative).unwrap();
        assert_eq!(p.jsc, 12.0);
    }

    #[test]
    fn pce_formula_direct() {
        // jsc = 10, voc = 0.6, ff = 0.6 at G = 100 -> pce = 3.6%
        let (jsc, voc, ff, g) = (10.0_f64, 0.6, 0.6, 100.0);
        let pce = jsc * voc * ff / g;
        assert!((pce - 0.036).abs() < 1e-15);
    }

    #[test]
    fn two_pce_routes_agree() {
        let p = extract_params(&linear_curve(1.0), SignConvention::PhotocurrentPositive).unwrap();
        let via_params = p.jsc * p.voc * p.ff / 100.0;
        assert!((p.pce - via_params).abs() <= 1e-9 * p.pce.abs());
        assert!(p.pmpp <= p.jsc * p.voc + 1e-12);
    }

    #[test]
    fn current_scaling_invariance() {
        let base = extract_params(&linear_curve(1.0), SignConvention::PhotocurrentPositive).unwrap();
        let k = 3.7;
        let scaled = extract_params(&linear_curve(k), SignConvention::PhotocurrentPositive).unwrap();
        assert!((scaled.jsc - k * base.jsc).abs() <= 1e-9 * base.jsc.abs() * k);
        assert!((scaled.pmpp - k * base.pmpp).abs() <= 1e-9 * base.pmpp.abs() * k);
        assert!((scaled.pce - k * base.pce).abs() <= 1e-9 * base.pce.abs() * k);
        assert!((scaled.voc - base.voc).abs() <= 1e-9);
        assert!((scaled.ff - base.ff).abs() <= 1e-9);
    }

    #[test]
    fn collinear_insertion_invariance() {
        let sparse = linear_curve(1.0);
        let p_sparse = extract_params(&sparse, SignConvention::PhotocurrentPositive).unwrap();
        // same line sampled twice as densely: every new point is collinear
        let voltage: Vec<f64> = (0..=20).map(|i| i as f64 * 0.025).collect();
        let current: Vec<f64> = voltage.iter().map(|v| 10.0 * (1.0 - v / 0.5)).collect();
        let dense = JvCurve::new(voltage, current, 100.0).unwrap();
        let p_dense = extract_params(&dense, SignConvention::PhotocurrentPositive).unwrap();
        assert!((p_sparse.jsc - p_dense.jsc).abs() < 1e-12);
        assert!((p_sparse.voc - p_dense.voc).abs() < 1e-12);
        assert!((p_sparse.pmpp - p_dense.pmpp).abs() < 1e-12);
    }

    #[test]
    fn dead_cell_reported_distinctly() {
        let curve = JvCurve::new(
            vec![0.0, 0.1, 0.2],
            vec![-5.0, -4.0, -3.0],
            100.0,
        )
        .unwrap();
        assert!(matches!(
            extract_params(&curve, SignConvention::PhotocurrentNegative),
            Err(JvError::NoZeroCrossing)
        ));
    }

    #[test]
    fn invalid_curves_rejected() {
        assert!(matches!(
            JvCurve::new(vec![0.0, 0.1], vec![1.0, 2.0], 100.0),
            Err(JvError::TooShort(2))
        ));
        assert!(matches!(
            JvCurve::new(vec![0.0, 0.2, 0.1], vec![1.0, 2.0, 3.0], 100.0),
            Err(JvError::NonMonotoneVoltage(2))
        ));
        assert!(matches!(
            JvCurve::new(vec![0.0, 0.1, 0.2], vec![1.0, 2.0, 3.0], 0.0),
            Err(JvError::BadIrradiance(_))
        ));
    }
}
