//! Damped least-squares fitting of the registered curve shapes.

use super::models::{CurveKind, CurveModel, ParametricModel};
use crate::metrics::MetricsBundle;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floor for Gaussian width coefficients; trial steps are pegged at the
/// boundary to keep the shape away from the c -> 0 singularity.
const WIDTH_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("x and y differ in length ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("{kind} needs at least {needed} points, got {got}")]
    InsufficientPoints { kind: CurveKind, needed: usize, got: usize },
    #[error("x values are constant; the fit is underdetermined")]
    ConstantX,
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("all {0} restarts diverged to non-finite residuals")]
    AllRestartsDiverged(usize),
    #[error("window {window} holds {got} points but {kind} needs {needed}")]
    WindowTooSmall { kind: CurveKind, window: f64, needed: usize, got: usize },
    #[error("empty horizon interval: no points in ({window}, {horizon}]")]
    EmptyHorizonInterval { window: f64, horizon: f64 },
    #[error("series '{0}' is empty")]
    EmptySeries(String),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol_grad: f64,
    pub tol_step: f64,
    pub lambda0: f64,
    pub n_restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 200,
            tol_grad: 1e-10,
            tol_step: 1e-10,
            lambda0: 1e-3,
            n_restarts: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ParametricModel,
    /// Goodness of fit on the fitting window itself.
    pub metrics: MetricsBundle,
    pub iterations: usize,
    pub converged: bool,
    pub window_days: f64,
}

fn validate(kind: CurveKind, x: &[f64], y: &[f64]) -> Result<(), FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let needed = kind.model().coeff_count();
    if x.len() < needed {
        return Err(FitError::InsufficientPoints { kind, needed, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteInput);
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(FitError::ConstantX);
    }
    Ok(())
}

/// Fits a shape to (x, y) by damped least squares; linear-in-coefficients
/// shapes are solved in closed form instead. With several restarts the
/// lowest-SSE solution wins; everything is deterministic under the seed.
///
/// Points are sorted internally, so the result is bit-identical under any
/// reordering of the input pairs.
pub fn fit(
    kind: CurveKind,
    x: &[f64],
    y: &[f64],
    init: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    validate(kind, x, y)?;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let model = kind.model();

    if model.linear_in_coeffs() {
        let coeffs = solve_linear(model, &xs, &ys);
        return finish(kind, coeffs, &xs, &ys, 0, true);
    }

    let k = model.coeff_count();
    let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
    for restart in 0..opts.n_restarts.max(1) {
        let start: Vec<f64> = if restart == 0 {
            match init {
                Some(c) => c.to_vec(),
                None => model.heuristic_init(&xs, &ys),
            }
        } else {
            // the classical fallback: coefficients drawn uniformly in [0, 1]
            let mut rng =
                ChaCha8Rng::seed_from_u64(crate::seed::derive(opts.seed, &[restart as u64]));
            (0..k).map(|_| rng.gen_range(0.0..1.0)).collect()
        };
        let mut start = start;
        peg_widths(model, &mut start);
        if let Some(run) = lm_minimize(model, &xs, &ys, start, opts) {
            let better = match &best {
                None => true,
                Some((_, sse, _, _)) => run.1 < *sse,
            };
            if better {
                best = Some(run);
            }
        }
    }
    let (mut coeffs, _, iterations, converged) =
        best.ok_or(FitError::AllRestartsDiverged(opts.n_restarts.max(1)))?;
    model.canonicalize(&mut coeffs);
    finish(kind, coeffs, &xs, &ys, iterations, converged)
}

/// Runs the iterative path even for linear-in-coefficients shapes. The
/// production `fit` solves those in closed form; this entry point exists so
/// the two routes can be compared.
pub fn fit_iterative(
    kind: CurveKind,
    x: &[f64],
    y: &[f64],
    init: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    validate(kind, x, y)?;
    let model = kind.model();
    let start = match init {
        Some(c) => c.to_vec(),
        None => model.heuristic_init(x, y),
    };
    let (mut coeffs, _, iterations, converged) = lm_minimize(model, x, y, start, opts)
        .ok_or(FitError::AllRestartsDiverged(1))?;
    model.canonicalize(&mut coeffs);
    finish(kind, coeffs, x, y, iterations, converged)
}

fn finish(
    kind: CurveKind,
    coeffs: Vec<f64>,
    xs: &[f64],
    ys: &[f64],
    iterations: usize,
    converged: bool,
) -> Result<FitResult, FitError> {
    let model = ParametricModel { kind, coeffs };
    let predicted = model.eval(xs);
    let metrics = MetricsBundle::compute(ys, &predicted)?;
    let window_days = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult { model, metrics, iterations, converged, window_days })
}

/// Ordinary least squares on the shape's jacobian columns (valid only for
/// linear-in-coefficients shapes, where the jacobian is the design matrix).
fn solve_linear(model: &dyn CurveModel, xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let k = model.coeff_count();
    let zeros = vec![0.0; k];
    let mut design = DMatrix::zeros(xs.len(), k);
    let mut row = vec![0.0; k];
    for (i, &x) in xs.iter().enumerate() {
        model.jacobian_at(&zeros, x, &mut row);
        for (j, &v) in row.iter().enumerate() {
            design[(i, j)] = v;
        }
    }
    let rhs = DVector::from_column_slice(ys);
    let qr = design.qr();
    let sol = qr.q().transpose() * rhs;
    let r = qr.r();
    // back-substitution on the upper-triangular factor
    let mut out = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = sol[i];
        for j in i + 1..k {
            acc -= r[(i, j)] * out[j];
        }
        out[i] = acc / r[(i, i)];
    }
    out
}

fn peg_widths(model: &dyn CurveModel, coeffs: &mut [f64]) {
    for &w in model.width_coeffs() {
        if coeffs[w].abs() < WIDTH_FLOOR {
            let sign = if coeffs[w] < 0.0 { -1.0 } else { 1.0 };
            coeffs[w] = sign * WIDTH_FLOOR;
        }
    }
}

fn sse_of(model: &dyn CurveModel, coeffs: &[f64], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - model.eval_at(coeffs, x);
            r * r
        })
        .sum()
}

/// Levenberg–Marquardt with multiplicative damping on the normal equations.
/// Steps are accepted only when they strictly reduce the SSE, so the SSE
/// trajectory is non-increasing. Returns (coeffs, sse, iterations,
/// converged), or None when the start already produces non-finite residuals.
fn lm_minimize(
    model: &dyn CurveModel,
    xs: &[f64],
    ys: &[f64],
    start: Vec<f64>,
    opts: &FitOptions,
) -> Option<(Vec<f64>, f64, usize, bool)> {
    let n = xs.len();
    let k = model.coeff_count();
    let mut coeffs = start;
    let mut sse = sse_of(model, &coeffs, xs, ys);
    if !sse.is_finite() {
        return None;
    }
    let mut lambda = opts.lambda0;
    let mut converged = false;
    let mut iterations = 0;

    let mut jac = DMatrix::zeros(n, k);
    let mut row = vec![0.0; k];
    'outer: for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let mut residual = DVector::zeros(n);
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            residual[i] = y - model.eval_at(&coeffs, x);
            model.jacobian_at(&coeffs, x, &mut row);
            for (j, &v) in row.iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        let jt = jac.transpose();
        let gram = &jt * &jac;
        let gradient = &jt * &residual; // J^T r; grad SSE = -2 J^T r
        if gradient.iter().all(|g| g.abs() < opts.tol_grad) {
            converged = true;
            break;
        }

        loop {
            // (J^T J + lambda diag(J^T J)) delta = J^T r
            let mut damped = gram.clone();
            for j in 0..k {
                let d = gram[(j, j)].max(1e-12);
                damped[(j, j)] = gram[(j, j)] + lambda * d;
            }
            let delta = match damped.cholesky() {
                Some(chol) => chol.solve(&gradient),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e14 {
                        break 'outer;
                    }
                    continue;
                }
            };
            let mut trial: Vec<f64> =
                coeffs.iter().zip(delta.iter()).map(|(c, d)| c + d).collect();
            peg_widths(model, &mut trial);
            let trial_sse = sse_of(model, &trial, xs, ys);
            if trial_sse.is_finite() && trial_sse < sse {
                debug_assert!(trial_sse <= sse, "accepted step may not increase SSE");
                let step: f64 = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                let scale: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
                coeffs = trial;
                sse = trial_sse;
                lambda = (lambda / 10.0).max(1e-12);
                if step < opts.tol_step * (scale + 1e-12) {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                // no acceptable step in any damping regime
                break 'outer;
            }
        }
    }
    Some((coeffs, sse, iterations, converged))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn days() -> Vec<f64> {
        (0..19).map(|i| i as f64 * 10.0).collect()
    }

    #[test]
    fn exp1_noiseless_recovery() {
        let truth = ParametricModel::new(CurveKind::Exp1, vec![1.0, -0.01]).unwrap();
        let x = days();
        let y = truth.eval(&x);
        let fit = fit(CurveKind::Exp1, &x, &y, None, &FitOptions::default()).unwrap();
        for (got, want) in fit.model.coeffs.iter().zip(&truth.coeffs) {
            assert!((got - want).abs() <= 1e-6 * want.abs().max(1e-9), "{got} vs {want}");
        }
        assert!(fit.converged);
    }

    #[test]
    fn gauss2_noiseless_sse_vanishes() {
        let truth =
            ParametricModel::new(CurveKind::Gauss2, vec![0.8, 20.0, 40.0, 0.4, 120.0, 50.0])
                .unwrap();
        let x = days();
        let y = truth.eval(&x);
        let fit = fit(CurveKind::Gauss2, &x, &y, None, &FitOptions::default()).unwrap();
        assert!(fit.metrics.sse <= 1e-12, "sse = {}", fit.metrics.sse);
    }

    #[test]
    fn poly3_matches_iterative_route() {
        let truth =
            ParametricModel::new(CurveKind::Poly3, vec![1e-6, -3e-4, 0.01, 0.9]).unwrap();
        let x = days();
        let y = truth.eval(&x);
        let closed = fit(CurveKind::Poly3, &x, &y, None, &FitOptions::default()).unwrap();
        let iterative = fit_iterative(
            CurveKind::Poly3,
            &x,
            &y,
            Some(&[0.0, 0.0, 0.0, 0.0]),
            &FitOptions { max_iter: 2000, ..Default::default() },
        )
        .unwrap();
        assert_eq!(closed.iterations, 0);
        for (a, b) in closed.model.coeffs.iter().zip(&truth.coeffs) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
        // both routes minimize the same objective
        assert!(iterative.metrics.sse <= closed.metrics.sse + 1e-10);
    }

    #[test]
    fn reordering_is_bit_exact() {
        let truth = ParametricModel::new(CurveKind::Gauss1, vec![0.9, 30.0, 80.0]).unwrap();
        let x = days();
        let mut y = truth.eval(&x);
        for (i, v) in y.iter_mut().enumerate() {
            *v += ((i * 37 % 11) as f64 - 5.0) * 1e-3;
        }
        let forward = fit(CurveKind::Gauss1, &x, &y, None, &FitOptions::default()).unwrap();
        let xr: Vec<f64> = x.iter().rev().copied().collect();
        let yr: Vec<f64> = y.iter().rev().copied().collect();
        let reversed = fit(CurveKind::Gauss1, &xr, &yr, None, &FitOptions::default()).unwrap();
        assert_eq!(forward.model.coeffs, reversed.model.coeffs);
    }

    #[test]
    fn underdetermined_fit_is_typed_error() {
        let x = [0.0, 10.0, 20.0];
        let y = [1.0, 0.9, 0.8];
        assert!(matches!(
            fit(CurveKind::Gauss2, &x, &y, None, &FitOptions::default()),
            Err(FitError::InsufficientPoints { needed: 6, got: 3, .. })
        ));
    }

    #[test]
    fn constant_x_rejected() {
        let x = [5.0, 5.0, 5.0];
        let y = [1.0, 0.9, 0.8];
        assert!(matches!(
            fit(CurveKind::Exp1, &x, &y, None, &FitOptions::default()),
            Err(FitError::ConstantX)
        ));
    }

    #[test]
    fn widths_stay_positive_after_canonicalization() {
        let truth = ParametricModel::new(CurveKind::Gauss1, vec![1.0, 50.0, -60.0]).unwrap();
        let x = days();
        let y = truth.eval(&x);
        let fit = fit(CurveKind::Gauss1, &x, &y, None, &FitOptions::default()).unwrap();
        assert!(fit.model.coeffs[2] > 0.0);
        assert!(fit.metrics.sse <= 1e-12);
    }
}
