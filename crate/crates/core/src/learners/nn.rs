//! Single-hidden-layer perceptron trained by full-batch gradient descent
//! with momentum, on standardized inputs and target.

use super::model::Standardization;
use super::spec::{get_f64, get_usize, HyperParams, HyperValue, TrainError};
use super::{FittedState, LearnerFamily};
use crate::data::Features;
use crate::seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub struct NeuralNet;

/// Weights operate in the standardized space; the surrounding model applies
/// the stored standardization on the way in and out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuralNetState {
    pub n_inputs: usize,
    pub hidden: usize,
    /// hidden × n_inputs, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl NeuralNetState {
    fn forward(&self, row: &[f64]) -> f64 {
        let mut out = self.b2;
        for h in 0..self.hidden {
            let mut z = self.b1[h];
            for (j, v) in row.iter().enumerate() {
                z += self.w1[h * self.n_inputs + j] * v;
            }
            if z > 0.0 {
                out += self.w2[h] * z;
            }
        }
        out
    }
}

impl FittedState for NeuralNetState {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.forward(row)
    }

    fn state_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("network serializes")
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

/// Loss `1/(2n) Σ (f(x_i) − y_i)²` and its gradient with respect to every
/// weight, as one flat vector ordered (w1, b1, w2, b2).
fn loss_and_gradient(
    state: &NeuralNetState,
    rows: &[Vec<f64>],
    y: &[f64],
) -> (f64, Vec<f64>) {
    let n = rows.len();
    let (ni, nh) = (state.n_inputs, state.hidden);
    let mut grad = vec![0.0; nh * ni + nh + nh + 1];
    let (gw1, rest) = grad.split_at_mut(nh * ni);
    let (gb1, rest) = rest.split_at_mut(nh);
    let (gw2, gb2) = rest.split_at_mut(nh);

    let mut loss = 0.0;
    let mut pre = vec![0.0; nh];
    for (row, &target) in rows.iter().zip(y) {
        let mut out = state.b2;
        for h in 0..nh {
            let mut z = state.b1[h];
            for (j, v) in row.iter().enumerate() {
                z += state.w1[h * ni + j] * v;
            }
            pre[h] = z;
            if z > 0.0 {
                out += state.w2[h] * z;
            }
        }
        let err = out - target;
        loss += err * err;
        let dout = err / n as f64;
        gb2[0] += dout;
        for h in 0..nh {
            if pre[h] > 0.0 {
                gw2[h] += dout * pre[h];
                let dz = dout * state.w2[h];
                gb1[h] += dz;
                for (j, v) in row.iter().enumerate() {
                    gw1[h * ni + j] += dz * v;
                }
            }
        }
    }
    (loss / (2.0 * n as f64), grad)
}

impl LearnerFamily for NeuralNet {
    fn name(&self) -> &'static str {
        "NN"
    }

    fn default_hyperparams(&self) -> HyperParams {
        HyperParams::from([
            ("hidden".into(), HyperValue::Int(32)),
            ("learning_rate".into(), HyperValue::Float(1e-2)),
            ("epochs".into(), HyperValue::Int(2000)),
            ("momentum".into(), HyperValue::Float(0.9)),
        ])
    }

    /// hidden {32, 8} × learning_rate {1e-2, 1e-3} at a fixed epoch budget,
    /// defaults first.
    fn search_grid(&self) -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for hidden in [32i64, 8] {
            for lr in [1e-2f64, 1e-3] {
                let mut p = self.default_hyperparams();
                p.insert("hidden".into(), HyperValue::Int(hidden));
                p.insert("learning_rate".into(), HyperValue::Float(lr));
                grid.push(p);
            }
        }
        grid
    }

    fn fit(
        &self,
        params: &HyperParams,
        seed_value: u64,
        x: &Features,
        y: &[f64],
    ) -> Result<(Option<Standardization>, Arc<dyn FittedState>), TrainError> {
        let hidden = get_usize(params, "hidden")?.max(1);
        let learning_rate = get_f64(params, "learning_rate")?;
        let epochs = get_usize(params, "epochs")?;
        let momentum = get_f64(params, "momentum")?;
        let n = x.n_rows();
        let ni = x.n_cols();

        let standardization = Standardization::from_training(x, Some(y));
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| standardization.standardize_row(x.row(i)))
            .collect();
        let zy: Vec<f64> = y.iter().map(|&v| standardization.standardize_target(v)).collect();

        let mut rng =
            ChaCha8Rng::seed_from_u64(seed::derive(seed_value, &[seed::label("nn-init")]));
        let bound1 = (6.0 / (ni + hidden) as f64).sqrt();
        let bound2 = (6.0 / (hidden + 1) as f64).sqrt();
        let mut state = NeuralNetState {
            n_inputs: ni,
            hidden,
            w1: (0..hidden * ni).map(|_| rng.gen_range(-bound1..bound1)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.gen_range(-bound2..bound2)).collect(),
            b2: 0.0,
        };

        let mut velocity = vec![0.0; hidden * ni + hidden + hidden + 1];
        for epoch in 0..epochs {
            let (loss, grad) = loss_and_gradient(&state, &rows, &zy);
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            for (v, g) in velocity.iter_mut().zip(&grad) {
                *v = momentum * *v - learning_rate * g;
            }
            let (vw1, rest) = velocity.split_at(hidden * ni);
            let (vb1, rest) = rest.split_at(hidden);
            let (vw2, vb2) = rest.split_at(hidden);
            for (w, v) in state.w1.iter_mut().zip(vw1) {
                *w += v;
            }
            for (b, v) in state.b1.iter_mut().zip(vb1) {
                *b += v;
            }
            for (w, v) in state.w2.iter_mut().zip(vw2) {
                *w += v;
            }
            state.b2 += vb2[0];
        }
        let (final_loss, _) = loss_and_gradient(&state, &rows, &zy);
        if !final_loss.is_finite() {
            return Err(TrainError::Diverged { epoch: epochs });
        }

        Ok((Some(standardization), Arc::new(state)))
    }

    fn load_state(
        &self,
        state: &serde_json::Value,
    ) -> Result<Arc<dyn FittedState>, super::spec::PersistError> {
        let state: NeuralNetState = serde_json::from_value(state.clone())?;
        Ok(Arc::new(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train, LearnerSpec};

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        // 5-sample toy problem at initialization
        let rows: Vec<Vec<f64>> = vec![
            vec![0.3, -1.2],
            vec![-0.7, 0.4],
            vec![1.5, 0.9],
            vec![-0.2, -0.5],
            vec![0.8, 1.1],
        ];
        let y = vec![0.2, -0.4, 1.3, 0.0, 0.9];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (ni, nh) = (2usize, 4usize);
        let state = NeuralNetState {
            n_inputs: ni,
            hidden: nh,
            w1: (0..nh * ni).map(|_| rng.gen_range(-0.8..0.8)).collect(),
            b1: (0..nh).map(|_| rng.gen_range(-0.3..0.3)).collect(),
            w2: (0..nh).map(|_| rng.gen_range(-0.8..0.8)).collect(),
            b2: 0.1,
        };
        let (_, analytic) = loss_and_gradient(&state, &rows, &y);

        let total = nh * ni + nh + nh + 1;
        let read = |s: &NeuralNetState, k: usize| -> f64 {
            if k < nh * ni {
                s.w1[k]
            } else if k < nh * ni + nh {
                s.b1[k - nh * ni]
            } else if k < nh * ni + 2 * nh {
                s.w2[k - nh * ni - nh]
            } else {
                s.b2
            }
        };
        let write = |s: &mut NeuralNetState, k: usize, v: f64| {
            if k < nh * ni {
                s.w1[k] = v;
            } else if k < nh * ni + nh {
                s.b1[k - nh * ni] = v;
            } else if k < nh * ni + 2 * nh {
                s.w2[k - nh * ni - nh] = v;
            } else {
                s.b2 = v;
            }
        };
        for k in 0..total {
            let h = 1e-6 * read(&state, k).abs().max(1.0);
            let mut plus = state.clone();
            write(&mut plus, k, read(&state, k) + h);
            let mut minus = state.clone();
            write(&mut minus, k, read(&state, k) - h);
            let (lp, _) = loss_and_gradient(&plus, &rows, &y);
            let (lm, _) = loss_and_gradient(&minus, &rows, &y);
            let fd = (lp - lm) / (2.0 * h);
            let diff = (analytic[k] - fd).abs();
            assert!(
                diff <= 1e-4 * analytic[k].abs().max(fd.abs()).max(1e-3),
                "weight {k}: analytic {} vs fd {fd}",
                analytic[k]
            );
        }
    }

    #[test]
    fn learns_a_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 60;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            data.push(x1);
            y.push(2.0 * x1 + 0.5);
        }
        let x = Features::new(vec!["x1".into()], data, n);
        let model = train(&LearnerSpec::new("NN", 0), &x, &y).unwrap();
        assert!(model.training_metrics.r2.unwrap() > 0.99);
    }

    #[test]
    fn divergence_is_a_typed_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            data.push(x1);
            y.push(x1 * 3.0);
        }
        let x = Features::new(vec!["x1".into()], data, n);
        let spec = LearnerSpec::new("NN", 0).with("learning_rate", HyperValue::Float(1e6));
        assert!(matches!(train(&spec, &x, &y), Err(TrainError::Diverged { .. })));
    }
}
