//! Propagation of `i dU/dt = (H0 - mu eps(t)) U` on a uniform grid.

pub mod dyson;
pub mod grid;
pub mod landscape;
pub mod objective;
pub mod split;

use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::field::ControlField;
use crate::linalg::{serde_cmatrix, unitarity_residual, CMatrix, C64};
use crate::system::QuantumSystem;

pub use dyson::{dyson_terms, dyson_terms_auto, order_interference, DysonDecomposition, DysonOptions, InterferenceTable};
pub use grid::{TimeGrid, DEFAULT_DT};
pub use landscape::{landscape_scan, LandscapeScan, ScanAxis};
pub use objective::{evaluate_objective, objective_value, ObjectiveSpec};
pub use split::{FieldSamples, ModeBasis, SplitOperator};

/// Default bound on `max |U^dagger U - I|`.
pub const DEFAULT_UNITARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct PropagationResult {
    #[serde(with = "serde_cmatrix")]
    pub final_unitary: CMatrix,
    #[serde(with = "serde_cmatrix")]
    pub interaction_final: CMatrix,
    pub unitarity_residual: f64,
    /// `U(t_q)` for `q = 0..=n_steps` when requested.
    #[serde(skip)]
    pub trajectory: Option<Vec<CMatrix>>,
}

pub(crate) fn check_durations(field: &ControlField, grid: &TimeGrid) -> Result<()> {
    if (grid.duration - field.duration).abs() > 1e-12 * field.duration.max(1.0) {
        return Err(validation(format!(
            "grid duration {} differs from field duration {}",
            grid.duration, field.duration
        )));
    }
    Ok(())
}

pub(crate) fn identity_block(n: usize) -> Vec<C64> {
    let mut b = vec![C64::default(); n * n];
    for k in 0..n {
        b[k * n + k] = C64::new(1.0, 0.0);
    }
    b
}

pub(crate) fn block_to_matrix(n: usize, block: &[C64]) -> CMatrix {
    CMatrix::from_column_slice(n, n, block)
}

/// `e^{i H0 T} U`.
pub fn to_interaction_frame(energies: &[f64], t: f64, u: &CMatrix) -> CMatrix {
    let mut out = u.clone();
    for (r, &e) in energies.iter().enumerate() {
        let ph = C64::from_polar(1.0, e * t);
        for c in 0..u.ncols() {
            out[(r, c)] *= ph;
        }
    }
    out
}

fn finish(system: &QuantumSystem, grid: &TimeGrid, block: &[C64], trajectory: Option<Vec<CMatrix>>, tol: f64) -> Result<PropagationResult> {
    let n = system.dimension();
    let u = block_to_matrix(n, block);
    let residual = unitarity_residual(&u);
    if !(residual <= tol) {
        return Err(Error::Integration { residual, tolerance: tol });
    }
    Ok(PropagationResult {
        interaction_final: to_interaction_frame(system.energies(), grid.duration, &u),
        final_unitary: u,
        unitarity_residual: residual,
        trajectory,
    })
}

/// Full propagator `U(T)` with the default unitarity tolerance.
pub fn propagate(system: &QuantumSystem, field: &ControlField, grid: &TimeGrid) -> Result<PropagationResult> {
    propagate_with(system, field, grid, DEFAULT_UNITARITY_TOL, false)
}

/// Full propagator with a custom tolerance, optionally storing `U(t_q)`.
pub fn propagate_with(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    tolerance: f64,
    store_trajectory: bool,
) -> Result<PropagationResult> {
    check_durations(field, grid)?;
    let n = system.dimension();
    let op = SplitOperator::real(system.energies(), system.dipole(), grid);
    let samples = FieldSamples::new(field, *grid);
    let mut block = identity_block(n);
    let trajectory = if store_trajectory {
        let mut traj = Vec::with_capacity(grid.n_steps + 1);
        traj.push(block_to_matrix(n, &block));
        op.run(&samples, &mut block, |_, _| {}, |_, b| traj.push(block_to_matrix(n, b)));
        Some(traj)
    } else {
        op.evolve(&samples, &mut block);
        None
    };
    finish(system, grid, &block, trajectory, tolerance)
}

/// Column `U(T) e_from` (Schrodinger picture) without building the full matrix.
pub fn propagate_column(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    from: usize,
) -> Result<Vec<C64>> {
    check_durations(field, grid)?;
    let n = system.dimension();
    if from >= n {
        return Err(validation(format!("initial state {from} out of range for N = {n}")));
    }
    let op = SplitOperator::real(system.energies(), system.dipole(), grid);
    let samples = FieldSamples::new(field, *grid);
    let mut col = vec![C64::default(); n];
    col[from] = C64::new(1.0, 0.0);
    op.evolve(&samples, &mut col);
    Ok(col)
}

/// `P_{to,from}(T) = |U_{to,from}(T)|^2`.
pub fn transition_probability(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    from: usize,
    to: usize,
) -> Result<f64> {
    let col = propagate_column(system, field, grid, from)?;
    col.get(to)
        .map(|z| z.norm_sqr())
        .ok_or_else(|| validation(format!("target state {to} out of range")))
}
