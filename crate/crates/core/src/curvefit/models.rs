//! The five parametric degradation shapes behind a common trait, registered
//! by name and selected at runtime.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Exp1,
    Exp2,
    Gauss1,
    Gauss2,
    Poly3,
}

impl CurveKind {
    pub fn model(self) -> &'static dyn CurveModel {
        match self {
            CurveKind::Exp1 => &Exp1,
            CurveKind::Exp2 => &Exp2,
            CurveKind::Gauss1 => &Gauss1,
            CurveKind::Gauss2 => &Gauss2,
            CurveKind::Poly3 => &Poly3,
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.model().name())
    }
}

impl FromStr for CurveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        lookup(s).map(|m| m.kind()).ok_or_else(|| {
            let names: Vec<&str> = registry().iter().map(|m| m.name()).collect();
            format!("unknown model '{s}': expected one of {}", names.join(", "))
        })
    }
}

/// A closed-form curve shape with analytic partial derivatives and a
/// data-driven initial guess. One registered instance per shape.
pub trait CurveModel: Send + Sync {
    fn kind(&self) -> CurveKind;
    fn name(&self) -> &'static str;
    fn coeff_names(&self) -> &'static [&'static str];
    fn eval_at(&self, coeffs: &[f64], x: f64) -> f64;
    /// Writes ∂f/∂coeff_k at `x` into `out` (length = coefficient count).
    fn jacobian_at(&self, coeffs: &[f64], x: f64, out: &mut [f64]);
    /// Initial coefficients estimated from the data.
    fn heuristic_init(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    /// Indices of width-like coefficients that must stay away from zero.
    fn width_coeffs(&self) -> &'static [usize] {
        &[]
    }
    /// Linear-in-coefficients shapes are solved in closed form instead of
    /// iterating.
    fn linear_in_coeffs(&self) -> bool {
        false
    }
    /// Maps coefficients to a canonical equivalent form (e.g. positive
    /// Gaussian widths); the function value is unchanged.
    fn canonicalize(&self, _coeffs: &mut [f64]) {}

    fn coeff_count(&self) -> usize {
        self.coeff_names().len()
    }
}

/// All registered shapes, in the order they are documented.
pub fn registry() -> &'static [&'static dyn CurveModel] {
    &[&Exp1, &Exp2, &Gauss1, &Gauss2, &Poly3]
}

/// Finds a registered shape by name.
pub fn lookup(name: &str) -> Option<&'static dyn CurveModel> {
    registry().iter().copied().find(|m| m.name() == name)
}

/// A shape plus concrete coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    pub kind: CurveKind,
    pub coeffs: Vec<f64>,
}

impl ParametricModel {
    pub fn new(kind: CurveKind, coeffs: Vec<f64>) -> Result<Self, String> {
        let model = kind.model();
        if coeffs.len() != model.coeff_count() {
            return Err(format!(
                "{} takes {} coefficients, got {}",
                model.name(),
                model.coeff_count(),
                coeffs.len()
            ));
        }
        for &w in model.width_coeffs() {
            if coeffs[w] == 0.0 {
                return Err(format!(
                    "{} width coefficient '{}' must be nonzero",
                    model.name(),
                    model.coeff_names()[w]
                ));
            }
        }
        Ok(ParametricModel { kind, coeffs })
    }

    pub fn eval_at(&self, x: f64) -> f64 {
        self.kind.model().eval_at(&self.coeffs, x)
    }

    pub fn eval(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval_at(x)).collect()
    }

    /// n × k matrix of partial derivatives, row-major.
    pub fn jacobian(&self, xs: &[f64]) -> Vec<f64> {
        let k = self.kind.model().coeff_count();
        let mut out = vec![0.0; xs.len() * k];
        for (i, &x) in xs.iter().enumerate() {
            self.kind
                .model()
                .jacobian_at(&self.coeffs, x, &mut out[i * k..(i + 1) * k]);
        }
        out
    }
}

fn range(values: &[f64]) -> f64 {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max - min
}

/// Decay rate estimated from the log-ratio of the first and last positive
/// samples; falls back to a mild decay when the signs do not cooperate.
fn log_ratio_rate(x: &[f64], y: &[f64]) -> f64 {
    let first = y.iter().position(|&v| v > 0.0);
    let last = y.iter().rposition(|&v| v > 0.0);
    match (first, last) {
        (Some(i), Some(j)) if j > i && x[j] > x[i] => (y[j] / y[i]).ln() / (x[j] - x[i]),
        _ => -0.01,
    }
}

pub struct Exp1;

impl CurveModel for Exp1 {
    fn kind(&self) -> CurveKind {
        CurveKind::Exp1
    }

    fn name(&self) -> &'static str {
        "exp1"
    }

    fn coeff_names(&self) -> &'static [&'static str] {
        &["a", "b"]
    }

    fn eval_at(&self, c: &[f64], x: f64) -> f64 {
        c[0] * (c[1] * x).exp()
    }

    fn jacobian_at(&self, c: &[f64], x: f64, out: &mut [f64]) {
        let e = (c[1] * x).exp();
        out[0] = e;
        out[1] = c[0] * x * e;
    }

    fn heuristic_init(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![y[0], log_ratio_rate(x, y)]
    }
}

pub struct Exp2;

impl CurveModel for Exp2 {
    fn kind(&self) -> CurveKind {
        CurveKind::Exp2
    }

    fn name(&self) -> &'static str {
        "exp2"
    }

    fn coeff_names(&self) -> &'static [&'static str] {
        &["a", "b", "c", "d"]
    }

    fn eval_at(&self, c: &[f64], x: f64) -> f64 {
        c[0] * (c[1] * x).exp() + c[2] * (c[3] * x).exp()
    }

    fn jacobian_at(&self, c: &[f64], x: f64, out: &mut [f64]) {
        let e1 = (c[1] * x).exp();
        let e2 = (c[3] * x).exp();
        out[0] = e1;
        out[1] = c[0] * x * e1;
        out[2] = e2;
        out[3] = c[2] * x * e2;
    }

    fn heuristic_init(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        // split the level between a fast and a slow component so the two
        // exponential columns start distinguishable
        let rate = log_ratio_rate(x, y);
        vec![0.7 * y[0], rate, 0.3 * y[0], rate / 3.0]
    }
}

fn gauss_term(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let u = (x - b) / c;
    a * (-u * u).exp()
}

fn gauss_jacobian(a: f64, b: f64, c: f64, x: f64, out: &mut [f64]) {
    let u = (x - b) / c;
    let g = (-u * u).exp();
    out[0] = g;
    out[1] = a * g * 2.0 * u / c;
    out[2] = a * g * 2.0 * u * u / c;
}

pub struct Gauss1;

impl CurveModel for Gauss1 {
    fn kind(&self) -> CurveKind {
        CurveKind::Gauss1
    }

    fn name(&self) -> &'static str {
        "gauss1"
    }

    fn coeff_names(&self) -> &'static [&'static str] {
        &["a1", "b1", "c1"]
    }

    fn eval_at(&self, c: &[f64], x: f64) -> f64 {
        gauss_term(c[0], c[1], c[2], x)
    }

    fn jacobian_at(&self, c: &[f64], x: f64, out: &mut [f64]) {
        gauss_jacobian(c[0], c[1], c[2], x, out);
    }

    fn heuristic_init(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        vec![y[peak], x[peak], (range(x) / 4.0).max(1e-3)]
    }

    fn width_coeffs(&self) -> &'static [usize] {
        &[2]
    }

    fn canonicalize(&self, coeffs: &mut [f64]) {
        coeffs[2] = coeffs[2].abs(); // width enters squared
    }
}

pub struct Gauss2;

impl CurveModel for Gauss2 {
    fn kind(&self) -> CurveKind {
        CurveKind::Gauss2
    }

    fn name(&self) -> &'static str {
        "gauss2"
    }

    fn coeff_names(&self) -> &'static [&'static str] {
        &["a1", "b1", "c1", "a2", "b2", "c2"]
    }

    fn eval_at(&self, c: &[f64], x: f64) -> f64 {
        gauss_term(c[0], c[1], c[2], x) + gauss_term(c[3], c[4], c[5], x)
    }

    fn jacobian_at(&self, c: &[f64], x: f64, out: &mut [f64]) {
        gauss_jacobian(c[0], c[1], c[2], x, &mut out[..3]);
        gauss_jacobian(c[3], c[4], c[5], x, &mut out[3..]);
    }

    fn heuristic_init(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let w = (range(x) / 4.0).max(1e-3);
        vec![
            y[peak],
            x[peak],
            w,
            y[peak] / 2.0,
            x[peak] + range(x) / 2.0,
            w,
        ]
    }

    fn width_coeffs(&self) -> &'static [usize] {
        &[2, 5]
    }

    fn canonicalize(&self, coeffs: &mut [f64]) {
        coeffs[2] = coeffs[2].abs();
        coeffs[5] = coeffs[5].abs();
    }
}

pub struct Poly3;

impl CurveModel for Poly3 {
    fn kind(&self) -> CurveKind {
        CurveKind::Poly3
    }

    fn name(&self) -> &'static str {
        "poly3"
    }

    fn coeff_names(&self) -> &'static [&'static str] {
        &["p1", "p2", "p3", "p4"]
    }

    fn eval_at(&self, c: &[f64], x: f64) -> f64 {
        ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
    }

    fn jacobian_at(&self, _c: &[f64], x: f64, out: &mut [f64]) {
        out[0] = x * x * x;
        out[1] = x * x;
        out[2] = x;
        out[3] = 1.0;
    }

    fn heuristic_init(&self, _x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, 0.0, 0.0] // unused: solved in closed form
    }

    fn linear_in_coeffs(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_names() {
        for model in registry() {
            assert_eq!(lookup(model.name()).unwrap().kind(), model.kind());
        }
        assert!(lookup("exp7").is_none());
        assert_eq!("gauss2".parse::<CurveKind>().unwrap(), CurveKind::Gauss2);
    }

    #[test]
    fn eval_examples() {
        let m = ParametricModel::new(CurveKind::Exp1, vec![1.0, 0.0]).unwrap();
        assert_eq!(m.eval_at(123.4), 1.0);
        // hand arithmetic: 0 + 0 + 1*3 + 2
        let m = ParametricModel::new(CurveKind::Poly3, vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.eval_at(3.0), 5.0);
        let m = ParametricModel::new(CurveKind::Gauss1, vec![2.0, 5.0, 1.0]).unwrap();
        assert_eq!(m.eval_at(5.0), 2.0);
    }

    #[test]
    fn jacobian_examples() {
        let m = ParametricModel::new(CurveKind::Exp1, vec![1.0, 0.0]).unwrap();
        let jac = m.jacobian(&[2.0]);
        assert_eq!(jac, vec![1.0, 2.0]);

        let m = ParametricModel::new(CurveKind::Poly3, vec![9.0, 9.0, 9.0, 9.0]).unwrap();
        assert_eq!(m.jacobian(&[2.0]), vec![8.0, 4.0, 2.0, 1.0]);

        let m = ParametricModel::new(CurveKind::Gauss1, vec![2.0, 5.0, 1.5]).unwrap();
        let jac = m.jacobian(&[5.0]);
        assert_eq!(jac[1], 0.0); // symmetric about the peak
    }

    #[test]
    fn nested_shapes_reduce_exactly() {
        let exp2 = ParametricModel::new(CurveKind::Exp2, vec![1.3, -0.02, 0.0, 0.5]).unwrap();
        let exp1 = ParametricModel::new(CurveKind::Exp1, vec![1.3, -0.02]).unwrap();
        let gauss2 =
            ParametricModel::new(CurveKind::Gauss2, vec![0.8, 10.0, 40.0, 0.0, 90.0, 50.0]).unwrap();
        let gauss1 = ParametricModel::new(CurveKind::Gauss1, vec![0.8, 10.0, 40.0]).unwrap();
        for i in 0..=20 {
            let x = i as f64 * 9.0;
            assert_eq!(exp2.eval_at(x), exp1.eval_at(x));
            assert_eq!(gauss2.eval_at(x), gauss1.eval_at(x));
        }
    }

    #[test]
    fn coefficient_count_enforced() {
        assert!(ParametricModel::new(CurveKind::Exp1, vec![1.0]).is_err());
        assert!(ParametricModel::new(CurveKind::Gauss1, vec![1.0, 0.0, 0.0]).is_err());
    }
}
