use crate::error::Result;
use crate::field::{Chromosome, ControlField};
use crate::linalg::{CMatrix, C64};
use crate::pmp::{objective_tag, terminal_gradient, GradientTrace};
use crate::propagator::split::STAGES;
use crate::propagator::{
    block_to_matrix, check_durations, identity_block, propagate, FieldSamples, ObjectiveSpec, SplitOperator, TimeGrid,
};
use crate::system::QuantumSystem;

/// Objective value and its exact derivative with respect to every kick's
/// field sample, by one forward and one adjoint sweep.
pub fn kick_gradient(op: &SplitOperator, samples: &FieldSamples, objective: &ObjectiveSpec) -> (f64, Vec<f64>) {
    let n = op.dimension();
    // Wirtinger derivative dJ/dU* as costate; dJ = 2 Re Tr[G^dagger dU]
    let (j, rec, mut lam) = match objective {
        ObjectiveSpec::TransitionProbability { from, to } => {
            let mut psi = vec![C64::default(); n];
            psi[*from] = C64::new(1.0, 0.0);
            let rec = op.evolve_recording_kicks(samples, &mut psi);
            let mut lam = vec![C64::default(); n];
            lam[*to] = psi[*to];
            (psi[*to].norm_sqr(), rec, lam)
        }
        _ => {
            let mut block = identity_block(n);
            let rec = op.evolve_recording_kicks(samples, &mut block);
            let u = block_to_matrix(n, &block);
            let g: CMatrix = match objective {
                ObjectiveSpec::Observable { rho0, theta } => theta * &u * rho0,
                ObjectiveSpec::GateDistance { target } => &u - target,
                ObjectiveSpec::TransitionProbability { .. } => unreachable!(),
            };
            (objective.value_unchecked(&u), rec, g.as_slice().to_vec())
        }
    };
    let sens = op.backward_sensitivities(samples, &rec, &mut lam);
    (j, sens.iter().map(|z| 2.0 * z.re).collect())
}

/// Sums kick derivatives per grid bin and divides by `dt`.
fn bin_density(kicks: &[f64], grid: &TimeGrid) -> Vec<f64> {
    let dt = grid.dt();
    kicks.chunks_exact(STAGES).map(|c| c.iter().sum::<f64>() / dt).collect()
}

/// `dJ/d eps(t_q)` on the grid bins.
pub fn nominal_gradient(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
) -> Result<GradientTrace> {
    check_durations(field, grid)?;
    objective.validate(system.dimension())?;
    let op = SplitOperator::real(system.energies(), system.dipole(), grid);
    let (_, kicks) = kick_gradient(&op, &FieldSamples::new(field, *grid), objective);
    Ok(GradientTrace::new(grid.bin_centers(), bin_density(&kicks, grid), objective_tag(objective)))
}

/// Objective value and gradient over the genes (frequencies, then phases)
/// by the chain rule through `eps(t) = A sum_k cos(w_k t + phi_k)`.
pub fn gene_gradient(
    system: &QuantumSystem,
    chromosome: &Chromosome,
    duration: f64,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
) -> Result<(f64, Vec<f64>)> {
    let field = chromosome.to_field(duration);
    check_durations(&field, grid)?;
    objective.validate(system.dimension())?;
    let op = SplitOperator::real(system.energies(), system.dipole(), grid);
    let (j, kicks) = kick_gradient(&op, &FieldSamples::new(&field, *grid), objective);
    let times = FieldSamples::kick_times(grid);
    let k = chromosome.n_modes();
    let a = chromosome.fixed_amplitude;
    let mut grad = vec![0.0; 2 * k];
    for m in 0..k {
        let (w, phi) = (chromosome.frequencies[m], chromosome.phases[m]);
        let (mut dw, mut dphi) = (0.0, 0.0);
        for (&t, &g) in times.iter().zip(&kicks) {
            let s = -a * (w * t + phi).sin() * g;
            dw += s * t;
            dphi += s;
        }
        grad[m] = dw;
        grad[k + m] = dphi;
    }
    Ok((j, grad))
}

/// Costate `Phi(t_q)` obtained by propagating the terminal gradient backwards.
#[derive(Debug, Clone)]
pub struct CostateTrajectory {
    pub times: Vec<f64>,
    pub phi: Vec<CMatrix>,
    pub terminal: CMatrix,
}

pub fn costate_trajectory(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
) -> Result<CostateTrajectory> {
    let n = system.dimension();
    let u = propagate(system, field, grid)?.final_unitary;
    let terminal = terminal_gradient(objective, &u)?;
    let op = SplitOperator::real(system.energies(), system.dipole(), grid);
    let samples = FieldSamples::new(field, *grid);
    let mut state = terminal.as_slice().to_vec();
    let mut phi = vec![CMatrix::zeros(n, n); grid.n_steps + 1];
    phi[grid.n_steps] = terminal.clone();
    op.run_backward(&samples, &mut state, |q, s| phi[q] = block_to_matrix(n, s));
    Ok(CostateTrajectory { times: grid.points(), phi, terminal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::propagator::propagate_with;

    #[test]
    fn trivial_observable_has_zero_gradient() {
        let sys = crate::system::example_system();
        let c = Chromosome::from_genes(&[1.5, 0.5, 0.3, 1.2], 0.1).unwrap();
        let g = TimeGrid::new(200, 20.0).unwrap();
        let obj = ObjectiveSpec::Observable { rho0: crate::linalg::projector(5, 0), theta: identity(5) };
        let t = nominal_gradient(&sys, &c.to_field(20.0), &g, &obj).unwrap();
        assert!(t.sup_norm < 1e-12, "{}", t.sup_norm);
    }

    #[test]
    fn costate_is_consistent_with_forward_trajectory() {
        let sys = crate::system::example_system();
        let f = Chromosome::from_genes(&[1.5, 0.5, 1.0, 0.3, 1.2, 2.0], 0.15).unwrap().to_field(20.0);
        let g = TimeGrid::new(250, 20.0).unwrap();
        let obj = ObjectiveSpec::transition(0, 3);
        let c = costate_trajectory(&sys, &f, &g, &obj).unwrap();
        let traj = propagate_with(&sys, &f, &g, 1e-9, true).unwrap().trajectory.unwrap();
        let ut = traj.last().unwrap();
        for q in [0, 17, 125, 250] {
            let want = &traj[q] * ut.adjoint() * &c.terminal;
            assert!(crate::linalg::max_abs_diff(&c.phi[q], &want) < 1e-9);
        }
    }
}
