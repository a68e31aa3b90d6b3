//! Classical parametric degradation fitting: five closed-form shapes
//! optimized by damped nonlinear least squares, plus the windowed
//! fit-and-forecast protocol.

mod forecast;
mod lm;
mod models;

pub use forecast::{forecast_experiment, DeviceSeries, ForecastCell, ForecastTable, WindowFit};
pub use lm::{fit, fit_iterative, FitError, FitOptions, FitResult};
pub use models::{lookup, registry, CurveKind, CurveModel, ParametricModel};
