use crate::error::{validation, Result};
use crate::linalg::{projector, unitarity_residual, CMatrix};
use crate::propagator::ObjectiveSpec;

/// Matrix gradient `G` of the objective on the unitary group, normalized so
/// that `dF = Re Tr[G^dagger dU]` for tangent `dU`.
///
/// Observable: `[Theta, U rho0 U^dagger] U`. Gate distance: `U W^dagger U - W`.
/// Transition probabilities use the observable form with projectors.
pub fn terminal_gradient(objective: &ObjectiveSpec, u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    objective.validate(n)?;
    let r = unitarity_residual(u);
    if !(r <= 1e-8) {
        return Err(validation(format!("terminal propagator is not unitary (residual {r:.2e})")));
    }
    Ok(match objective {
        ObjectiveSpec::Observable { rho0, theta } => observable(u, rho0, theta),
        ObjectiveSpec::TransitionProbability { from, to } => observable(u, &projector(n, *from), &projector(n, *to)),
        ObjectiveSpec::GateDistance { target } => u * target.adjoint() * u - target,
    })
}

fn observable(u: &CMatrix, rho0: &CMatrix, theta: &CMatrix) -> CMatrix {
    let rho_t = u * rho0 * u.adjoint();
    (theta * &rho_t - &rho_t * theta) * u
}
