//! Control objectives evaluated on the final propagator.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::ControlField;
use crate::linalg::{is_hermitian, is_unitary, serde_cmatrix, CMatrix};
use crate::propagator::{propagate, transition_probability, PropagationResult, TimeGrid};
use crate::system::QuantumSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `|U_{to,from}(T)|^2`.
    TransitionProbability { from: usize, to: usize },
    /// `Tr[U rho0 U^dagger Theta]`.
    Observable {
        #[serde(with = "serde_cmatrix")]
        rho0: CMatrix,
        #[serde(with = "serde_cmatrix")]
        theta: CMatrix,
    },
    /// `||U(T) - W||_F^2`.
    GateDistance {
        #[serde(with = "serde_cmatrix")]
        target: CMatrix,
    },
}

impl ObjectiveSpec {
    pub fn transition(from: usize, to: usize) -> Self {
        ObjectiveSpec::TransitionProbability { from, to }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let square = |m: &CMatrix, name: &str| {
            if m.nrows() != n || m.ncols() != n {
                Err(validation(format!("{name} must be {n}x{n}")))
            } else {
                Ok(())
            }
        };
        match self {
            ObjectiveSpec::TransitionProbability { from, to } => {
                if *from >= n || *to >= n {
                    return Err(validation(format!("transition {from}->{to} out of range for N = {n}")));
                }
            }
            ObjectiveSpec::Observable { rho0, theta } => {
                square(rho0, "rho0")?;
                square(theta, "Theta")?;
                if !is_hermitian(rho0, 1e-12) || !is_hermitian(theta, 1e-12) {
                    return Err(validation("rho0 and Theta must be Hermitian"));
                }
            }
            ObjectiveSpec::GateDistance { target } => {
                square(target, "W")?;
                if !is_unitary(target, 1e-10) {
                    return Err(validation("target gate W must be unitary"));
                }
            }
        }
        Ok(())
    }

    /// Gate distance is minimized; the other objectives are maximized.
    pub fn is_maximized(&self) -> bool {
        !matches!(self, ObjectiveSpec::GateDistance { .. })
    }

    /// Value on a Schrodinger-picture `U(T)`.
    pub fn value(&self, u: &CMatrix) -> Result<f64> {
        self.validate(u.nrows())?;
        Ok(self.value_unchecked(u))
    }

    pub(crate) fn value_unchecked(&self, u: &CMatrix) -> f64 {
        match self {
            ObjectiveSpec::TransitionProbability { from, to } => u[(*to, *from)].norm_sqr(),
            ObjectiveSpec::Observable { rho0, theta } => {
                let rho_t = u * rho0 * u.adjoint();
                (rho_t * theta).trace().re
            }
            ObjectiveSpec::GateDistance { target } => (u - target).iter().map(|z| z.norm_sqr()).sum(),
        }
    }
}

pub fn objective_value(result: &PropagationResult, objective: &ObjectiveSpec) -> Result<f64> {
    objective.value(&result.final_unitary)
}

/// Propagates and evaluates, using a single-column propagation for
/// transition probabilities.
pub fn evaluate_objective(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
) -> Result<f64> {
    objective.validate(system.dimension())?;
    match objective {
        ObjectiveSpec::TransitionProbability { from, to } => transition_probability(system, field, grid, *from, *to),
        _ => objective_value(&propagate(system, field, grid)?, objective),
    }
}
