//! Costates, terminal gradients and time-resolved objective gradients.
//!
//! Gradients are taken with respect to the field value in each grid bin;
//! `g(t_q)` is the derivative density, so a bump of height `h` over bin `q`
//! changes the objective by `h * dt * g(t_q)` to first order.

mod expected;
mod hessian;
mod nominal;
mod terminal;

use serde::{Deserialize, Serialize};

pub use expected::expected_gradient;
pub use hessian::{ascend_bins, bin_gradient, field_hessian, numerical_rank, spectrum};
pub use nominal::{costate_trajectory, gene_gradient, kick_gradient, nominal_gradient, CostateTrajectory};
pub use terminal::terminal_gradient;

/// Certification tolerance for gradient-polished fields.
pub const POLISHED_RESIDUAL_TOL: f64 = 1e-3;
/// Certification tolerance for raw GA output.
pub const GA_RESIDUAL_TOL: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientTrace {
    /// Bin centres `t_q`.
    pub times: Vec<f64>,
    /// `dJ/d eps(t_q)` (or `dE[J]/d eps(t_q)`).
    pub values: Vec<f64>,
    pub sup_norm: f64,
    pub objective: String,
}

impl GradientTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, objective: impl Into<String>) -> Self {
        let sup_norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Self { times, values, sup_norm, objective: objective.into() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,g\n");
        for (t, g) in self.times.iter().zip(&self.values) {
            s.push_str(&format!("{t:.17e},{g:.17e}\n"));
        }
        s
    }
}

/// Sup-norm of the trace: the first-order optimality residual.
pub fn pmp_residual(trace: &GradientTrace) -> f64 {
    trace.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

pub(crate) fn objective_tag(objective: &crate::propagator::ObjectiveSpec) -> String {
    use crate::propagator::ObjectiveSpec::*;
    match objective {
        TransitionProbability { from, to } => format!("P[{to}<-{from}]"),
        Observable { .. } => "observable".into(),
        GateDistance { .. } => "gate_distance".into(),
    }
}
