//! Moments of transition amplitudes and probabilities under parameter
//! uncertainty: asymptotic (pathway-based), Monte-Carlo and leading-order
//! Taylor estimates.

mod asymptotic;
mod interference;
mod leading;
mod monte_carlo;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::ControlField;
use crate::pathways::PathwayTable;
use crate::system::QuantumSystem;
use crate::uncertainty::{ParameterTarget, UncertainParameter};

pub use asymptotic::{asymptotic_moments, RobustnessReport, UNITY_FLAG_TOL};
pub use interference::{interference_breakdown, InterferenceBin, InterferenceBreakdown, InterferenceTerm, DEFAULT_POLAR_BINS};
pub use leading::{leading_order_from_fn, leading_order_moments, LeadingOrderMoments};
pub use monte_carlo::{calibrate_samples, mc_estimate, mc_estimate_with, McEstimate, McOptions, McSampler, MIN_SAMPLES};

/// Independent laws, one per encoded parameter, aligned by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub parameters: Vec<UncertainParameter>,
}

impl MomentSpec {
    pub fn new(parameters: Vec<UncertainParameter>) -> Self {
        Self { parameters }
    }

    pub fn targets(&self) -> Vec<ParameterTarget> {
        self.parameters.iter().map(|p| p.target).collect()
    }

    pub fn validate(&self, system: &QuantumSystem, field: &ControlField) -> Result<()> {
        if self.parameters.is_empty() {
            return Err(validation("moment spec needs at least one parameter"));
        }
        for (a, p) in self.parameters.iter().enumerate() {
            p.validate(system, field)?;
            if self.parameters[..a].iter().any(|q| q.target == p.target) {
                return Err(validation(format!("{} listed twice", p.target.label())));
            }
        }
        Ok(())
    }

    /// Errors unless the spec lists the table's encoded parameters in order.
    pub fn check_alignment(&self, table: &PathwayTable) -> Result<()> {
        let labels: Vec<String> = self.parameters.iter().map(|p| p.target.label()).collect();
        if labels != table.labels {
            return Err(validation(format!(
                "moment spec parameters {labels:?} do not match encoded parameters {:?}",
                table.labels
            )));
        }
        for p in &self.parameters {
            p.distribution.validate()?;
        }
        Ok(())
    }

    /// `table[k][j] = E[theta_k^j]` for `j <= max_power`.
    pub(crate) fn moment_table(&self, theta: &[f64], max_power: u32) -> Vec<Vec<f64>> {
        self.parameters
            .iter()
            .zip(theta)
            .map(|(p, &t)| (0..=max_power).map(|j| p.distribution.parameter_moment(t, j)).collect())
            .collect()
    }
}

/// `prod_k E[theta_k^(a_k + b_k)]`.
pub(crate) fn joint_moment(table: &[Vec<f64>], a: &[u32], b: &[u32]) -> f64 {
    table
        .iter()
        .zip(a.iter().zip(b))
        .map(|(m, (&x, &y))| m[(x + y) as usize])
        .product()
}
