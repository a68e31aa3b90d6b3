//! Synthetic dataset generator: a schema-compatible stand-in for the
//! laboratory measurement table.
//!
//! Per cell, manufacturing descriptors are drawn once from the documented
//! ranges and held constant; environmental descriptors are drawn per row.
//! The target is built by a fixed, documented rule:
//!
//! ```text
//! s     = (solvent − 250) / 750          in [0, 1]
//! r     = (ratio − 1) / 0.25             in [0, 1]
//! level = 0.75 + 0.20 s + 0.05 r         scales the initial efficiency
//! rate  = 1.6 − 0.9 s                    more solvent, slower degradation
//! pce(d) = pce0 · level · decay(d · rate) + N(0, noise_sd)
//! ```
//!
//! with `pce0` the cell's day-zero efficiency (fraction, drawn from
//! [0.02, 0.04]) and `decay` the cell's unit-scale decay shape. Solvent
//! quantity therefore drives both the level and the degradation speed;
//! environmental columns never enter the rule and carry no signal.

use crate::curvefit::{CurveKind, ParametricModel};
use crate::data::{ColumnRole, ColumnSpec, DataTable};
use crate::seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_cells: usize,
    /// Measurement days shared by every cell.
    pub days: Vec<f64>,
    /// Per-cell decay shapes; when absent, a seeded two-Gaussian decay is
    /// drawn per cell.
    pub decay: Option<Vec<ParametricModel>>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_cells: 5,
            days: default_schedule(33),
            decay: None,
            noise_sd: 3e-4,
            seed: 0,
        }
    }
}

/// Evenly spaced integer days covering 0..=180.
pub fn default_schedule(rows_per_cell: usize) -> Vec<f64> {
    let n = rows_per_cell.max(2);
    (0..n)
        .map(|i| (i as f64 * 180.0 / (n - 1) as f64).round())
        .collect()
}

/// Standard normal draw (Box–Muller; two uniforms per sample).
fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn default_decay(rng: &mut ChaCha8Rng) -> ParametricModel {
    let a1 = rng.gen_range(0.5..0.7);
    let c1 = rng.gen_range(60.0..120.0);
    let c2 = rng.gen_range(150.0..300.0);
    ParametricModel::new(CurveKind::Gauss2, vec![a1, 0.0, c1, 1.0 - a1, 0.0, c2])
        .expect("valid synthetic decay shape")
}

pub fn synth_columns() -> Vec<ColumnSpec> {
    vec![
        ColumnSpec::categorical("cell", ColumnRole::GroupId),
        ColumnSpec::numeric("solvent_htl_ul", "ul", ColumnRole::Feature),
        ColumnSpec::numeric("p3ht_mg", "mg", ColumnRole::Feature),
        ColumnSpec::numeric("pcbm_mg", "mg", ColumnRole::Feature),
        ColumnSpec::numeric("ratio_p3ht_pcbm", "", ColumnRole::Feature),
        ColumnSpec::numeric("temperature_c", "C", ColumnRole::Feature),
        ColumnSpec::numeric("humidity_pct", "%", ColumnRole::Feature),
        ColumnSpec::numeric("dew_point_c", "C", ColumnRole::Feature),
        ColumnSpec::numeric("pressure_hpa", "hPa", ColumnRole::Feature),
        ColumnSpec::numeric("time_days", "days", ColumnRole::Time),
        ColumnSpec::numeric("pce", "", ColumnRole::Target),
    ]
}

/// Generates the table; fully deterministic under the config seed.
pub fn synth_dataset(config: &SynthConfig) -> DataTable {
    let n_cells = config.n_cells.max(1);
    let mut columns = synth_columns();
    let labels: Vec<String> = (1..=n_cells).map(|i| format!("Cell{i}")).collect();
    columns[0].categories = Some(labels);

    let mut data = Vec::with_capacity(n_cells * config.days.len() * columns.len());
    for cell in 0..n_cells {
        let mut cell_rng = ChaCha8Rng::seed_from_u64(seed::derive(
            config.seed,
            &[seed::label("synth-cell"), cell as u64],
        ));
        let solvent = cell_rng.gen_range(250.0..1000.0);
        let p3ht = cell_rng.gen_range(1.0..1.2);
        let pcbm = cell_rng.gen_range(0.8..1.0);
        let ratio = cell_rng.gen_range(1.0..1.25);
        let pce0 = cell_rng.gen_range(0.02..0.04);
        let decay = match &config.decay {
            Some(models) => models[cell % models.len()].clone(),
            None => default_decay(&mut cell_rng),
        };

        let s = (solvent - 250.0) / 750.0;
        let r = (ratio - 1.0) / 0.25;
        let level = 0.75 + 0.20 * s + 0.05 * r;
        let rate = 1.6 - 0.9 * s;

        for (row, &day) in config.days.iter().enumerate() {
            let mut row_rng = ChaCha8Rng::seed_from_u64(seed::derive(
                config.seed,
                &[seed::label("synth-row"), cell as u64, row as u64],
            ));
            let temperature = row_rng.gen_range(12.0..23.0);
            let humidity = row_rng.gen_range(33.0..88.0);
            let dew_point = row_rng.gen_range(3.0..19.0);
            let pressure = row_rng.gen_range(997.0..1022.0);
            let noise = config.noise_sd * sample_normal(&mut row_rng);
            let pce = pce0 * level * decay.eval_at(day * rate) + noise;
            data.extend_from_slice(&[
                cell as f64,
                solvent,
                p3ht,
                pcbm,
                ratio,
                temperature,
                humidity,
                dew_point,
                pressure,
                day,
                pce,
            ]);
        }
    }
    DataTable::new(columns, data, n_cells * config.days.len())
}
