//! Multivariate linear regression via QR on standardized features.

use super::model::Standardization;
use super::spec::{HyperParams, TrainError};
use super::{FittedState, LearnerFamily};
use crate::data::Features;
use crate::linalg::least_squares;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub struct MultivariateLinear;

/// Fitted coefficients in original feature units; prediction is the plain
/// dot product plus intercept, so the state is self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModelState {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl FittedState for LinearModelState {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut acc = self.intercept;
        for (c, v) in self.coefficients.iter().zip(row) {
            acc += c * v;
        }
        acc
    }

    fn state_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("linear state serializes")
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

impl LearnerFamily for MultivariateLinear {
    fn name(&self) -> &'static str {
        "MVL"
    }

    fn default_hyperparams(&self) -> HyperParams {
        HyperParams::new()
    }

    fn search_grid(&self) -> Vec<HyperParams> {
        vec![HyperParams::new()]
    }

    fn fit(
        &self,
        _params: &HyperParams,
        _seed: u64,
        x: &Features,
        y: &[f64],
    ) -> Result<(Option<Standardization>, Arc<dyn FittedState>), TrainError> {
        let n = x.n_rows();
        let m = x.n_cols();

        // standardize for conditioning; constant columns are collinear with
        // the intercept and reported as rank deficiency
        let mut means = vec![0.0; m];
        let mut sds = vec![0.0; m];
        let mut degenerate = Vec::new();
        for j in 0..m {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            means[j] = mean;
            sds[j] = var.sqrt();
            if sds[j] == 0.0 {
                degenerate.push(x.names()[j].clone());
            }
        }
        if !degenerate.is_empty() {
            return Err(TrainError::RankDeficient { columns: degenerate });
        }

        let mut design = DMatrix::zeros(n, m + 1);
        for i in 0..n {
            design[(i, 0)] = 1.0;
            for j in 0..m {
                design[(i, j + 1)] = (x.value(i, j) - means[j]) / sds[j];
            }
        }

        // modified Gram-Schmidt rank probe that names dependent columns
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut dependent = Vec::new();
        for j in 0..m + 1 {
            let mut v: Vec<f64> = (0..n).map(|i| design[(i, j)]).collect();
            let original: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for q in &basis {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
            let remaining: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if remaining <= 1e-8 * original.max(1.0) {
                if j > 0 {
                    dependent.push(x.names()[j - 1].clone());
                }
                continue;
            }
            for vi in v.iter_mut() {
                *vi /= remaining;
            }
            basis.push(v);
        }
        if !dependent.is_empty() {
            return Err(TrainError::RankDeficient { columns: dependent });
        }

        let solution = least_squares(&design, y);
        // map back to original units:
        //   y = b0 + sum w_j (x_j - mu_j) / sd_j
        let mut coefficients = vec![0.0; m];
        let mut intercept = solution[0];
        for j in 0..m {
            coefficients[j] = solution[j + 1] / sds[j];
            intercept -= solution[j + 1] * means[j] / sds[j];
        }
        Ok((None, Arc::new(LinearModelState { coefficients, intercept })))
    }

    fn load_state(
        &self,
        state: &serde_json::Value,
    ) -> Result<Arc<dyn FittedState>, super::spec::PersistError> {
        let state: LinearModelState = serde_json::from_value(state.clone())?;
        Ok(Arc::new(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, LearnerSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_plane(n: usize) -> (Features, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(-2.0..2.0);
            let x2: f64 = rng.gen_range(-2.0..2.0);
            data.extend_from_slice(&[x1, x2]);
            y.push(3.0 * x1 - 2.0 * x2 + 1.0);
        }
        (Features::new(vec!["x1".into(), "x2".into()], data, n), y)
    }

    #[test]
    fn recovers_exact_plane() {
        let (x, y) = exact_plane(30);
        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        let state = model.state().as_any().downcast_ref::<LinearModelState>().unwrap();
        assert!((state.coefficients[0] - 3.0).abs() < 1e-8);
        assert!((state.coefficients[1] + 2.0).abs() < 1e-8);
        assert!((state.intercept - 1.0).abs() < 1e-8);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        // independent oracle: solve (A^T A) w = A^T y by Gaussian elimination
        let (x, y) = exact_plane(25);
        let n = x.n_rows();
        let mut ata = [[0.0f64; 3]; 3];
        let mut aty = [0.0f64; 3];
        for i in 0..n {
            let row = [1.0, x.value(i, 0), x.value(i, 1)];
            for a in 0..3 {
                for b in 0..3 {
                    ata[a][b] += row[a] * row[b];
                }
                aty[a] += row[a] * y[i];
            }
        }
        // gaussian elimination with partial pivoting
        let mut aug = [[0.0f64; 4]; 3];
        for a in 0..3 {
            aug[a][..3].copy_from_slice(&ata[a]);
            aug[a][3] = aty[a];
        }
        for col in 0..3 {
            let pivot = (col..3).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs())).unwrap();
            aug.swap(col, pivot);
            for r in col + 1..3 {
                let f = aug[r][col] / aug[col][col];
                for c in col..4 {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
        let mut w = [0.0f64; 3];
        for r in (0..3).rev() {
            let mut acc = aug[r][3];
            for c in r + 1..3 {
                acc -= aug[r][c] * w[c];
            }
            w[r] = acc / aug[r][r];
        }

        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        let state = model.state().as_any().downcast_ref::<LinearModelState>().unwrap();
        assert!((state.intercept - w[0]).abs() < 1e-8);
        assert!((state.coefficients[0] - w[1]).abs() < 1e-8);
        assert!((state.coefficients[1] - w[2]).abs() < 1e-8);
    }

    #[test]
    fn rank_deficiency_names_offenders() {
        let mut data = Vec::new();
        let mut y = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x1: f64 = rng.gen_range(0.0..1.0);
            data.extend_from_slice(&[x1, 2.0 * x1]);
            y.push(x1);
        }
        let x = Features::new(vec!["x1".into(), "x1_twice".into()], data, 20);
        match train(&LearnerSpec::new("MVL", 0), &x, &y) {
            Err(TrainError::RankDeficient { columns }) => {
                assert_eq!(columns, vec!["x1_twice".to_string()]);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn constant_input_predicts_intercept_plus_terms() {
        let (x, y) = exact_plane(30);
        let model = train(&LearnerSpec::new("MVL", 0), &x, &y).unwrap();
        // at the origin the prediction is the intercept
        let zero = Features::new(vec!["x1".into(), "x2".into()], vec![0.0, 0.0], 1);
        let p = model.predict(&zero).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-8);
    }
}
