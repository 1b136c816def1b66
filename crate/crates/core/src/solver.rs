//! Shared solver plumbing: error taxonomy, per-step metrics, and the
//! positivity/finiteness monitors both integrators run before and after
//! every step.
//!
//! Monitors abort rather than clip: a state that leaves the physical regime
//! (pressure or entropy at or below its floor, non-finite values) is a
//! failed experiment, not something to silently repair.

use thiserror::Error;

use crate::eos::EosError;
use crate::field::ScalarField;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("positivity monitor tripped: min {field} = {min:.6e} ≤ floor {floor:.1e} at t = {t:.6}")]
    Positivity {
        field: &'static str,
        min: f64,
        floor: f64,
        t: f64,
    },
    #[error("non-finite values in {field} at t = {t:.6}")]
    NonFinite { field: &'static str, t: f64 },
    #[error("step size {dt:.6e} exceeds the stability limit {limit:.6e} at t = {t:.6}")]
    CflViolation { dt: f64, limit: f64, t: f64 },
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error("{0}")]
    Usage(String),
}

impl SolverError {
    pub fn usage(msg: impl Into<String>) -> Self {
        SolverError::Usage(msg.into())
    }
}

/// Scalars recorded once per accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepMetrics {
    pub t: f64,
    pub dt: f64,
    /// Minimum pressure over the grid after the step.
    pub min_p: f64,
    /// Minimum entropy over the grid after the step.
    pub min_s: f64,
    /// Max-norm of div H after the step (projection residual).
    pub div_h: f64,
    /// Fastest transport signal speed seen when the step was taken.
    pub max_speed: f64,
}

/// Receives per-step metrics from the integrators. Implementations must not
/// influence the computation (pure observers).
pub trait MetricsSink {
    fn record(&mut self, m: StepMetrics);
}

/// Discards everything.
pub struct NullSink;

impl MetricsSink for NullSink {
    fn record(&mut self, _m: StepMetrics) {}
}

/// Collects every step's metrics in order.
#[derive(Default)]
pub struct VecSink(pub Vec<StepMetrics>);

impl MetricsSink for VecSink {
    fn record(&mut self, m: StepMetrics) {
        self.0.push(m);
    }
}

/// Check a thermodynamic scalar against its floor; `name` labels diagnostics.
pub fn check_positive(
    field: &ScalarField,
    name: &'static str,
    floor: f64,
    t: f64,
) -> Result<f64, SolverError> {
    if !field.is_finite() {
        return Err(SolverError::NonFinite { field: name, t });
    }
    let min = field.min_value();
    if min <= floor {
        return Err(SolverError::Positivity {
            field: name,
            min,
            floor,
            t,
        });
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;

    #[test]
    fn monitors_catch_floor_and_nan() {
        let g = TorusGrid::new(8, 1).unwrap();
        let ok = ScalarField::constant(g, 1.0);
        assert!(check_positive(&ok, "p", 1e-8, 0.0).is_ok());
        let bad = ScalarField::constant(g, 1e-9);
        match check_positive(&bad, "p", 1e-8, 0.25) {
            Err(SolverError::Positivity { field, min, .. }) => {
                assert_eq!(field, "p");
                assert!((min - 1e-9).abs() < 1e-24);
            }
            other => panic!("expected positivity error, got {other:?}"),
        }
        let nan = ScalarField::constant(g, f64::NAN);
        assert!(matches!(
            check_positive(&nan, "S", 1e-8, 0.0),
            Err(SolverError::NonFinite { .. })
        ));
    }
}
