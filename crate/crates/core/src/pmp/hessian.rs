//! Second-order structure of the objective over piecewise-constant bin
//! offsets, and L-BFGS ascent in that space.

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::condition::ArmijoCondition;
use argmin::solver::linesearch::BacktrackingLineSearch;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pmp::kick_gradient;
use crate::propagator::split::STAGES;
use crate::propagator::{FieldSamples, ObjectiveSpec, SplitOperator};

/// Objective and its derivative with respect to a constant offset of the
/// field over each bin.
pub fn bin_gradient(op: &SplitOperator, samples: &FieldSamples, objective: &ObjectiveSpec) -> (f64, Vec<f64>) {
    let (j, kicks) = kick_gradient(op, samples, objective);
    (j, kicks.chunks_exact(STAGES).map(|c| c.iter().sum()).collect())
}

/// Symmetrized Hessian over bin offsets by central differences of
/// [`bin_gradient`] with step `h`.
pub fn field_hessian(op: &SplitOperator, samples: &FieldSamples, objective: &ObjectiveSpec, h: f64) -> DMatrix<f64> {
    use rayon::prelude::*;
    let m = samples.grid().n_steps;
    let cols: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|b| {
            let mut plus = samples.clone();
            plus.bump(b, h);
            let mut minus = samples.clone();
            minus.bump(b, -h);
            let (_, gp) = bin_gradient(op, &plus, objective);
            let (_, gm) = bin_gradient(op, &minus, objective);
            gp.iter().zip(&gm).map(|(p, q)| (p - q) / (2.0 * h)).collect()
        })
        .collect();
    let raw = DMatrix::from_fn(m, m, |i, j| cols[j][i]);
    (&raw + raw.transpose()) * 0.5
}

/// Eigenvalue magnitudes of a symmetric matrix, descending.
pub fn spectrum(hessian: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = hessian.clone().symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Count of eigenvalues above `rel_tol` times the largest.
pub fn numerical_rank(hessian: &DMatrix<f64>, rel_tol: f64) -> usize {
    let ev = spectrum(hessian);
    let top = ev.first().copied().unwrap_or(0.0);
    ev.iter().filter(|&&v| v > rel_tol * top).count()
}

struct BinProblem<'a> {
    op: &'a SplitOperator,
    base: &'a FieldSamples,
    objective: &'a ObjectiveSpec,
    sign: f64,
}

impl BinProblem<'_> {
    fn samples(&self, offsets: &[f64]) -> FieldSamples {
        let mut s = self.base.clone();
        for (b, &x) in offsets.iter().enumerate() {
            s.bump(b, x);
        }
        s
    }
}

impl CostFunction for BinProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-self.sign * bin_gradient(self.op, &self.samples(x), self.objective).0)
    }
}

impl Gradient for BinProblem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let (_, g) = bin_gradient(self.op, &self.samples(x), self.objective);
        Ok(g.iter().map(|v| -self.sign * v).collect())
    }
}

/// Improves the objective (maximized or minimized per its orientation) by
/// L-BFGS over bin offsets, stopping early once `target` is reached;
/// returns the final samples and objective value.
pub fn ascend_bins(
    op: &SplitOperator,
    samples: &FieldSamples,
    objective: &ObjectiveSpec,
    max_iters: u64,
    target: Option<f64>,
) -> Result<(FieldSamples, f64)> {
    let problem = BinProblem { op, base: samples, objective, sign: if objective.is_maximized() { 1.0 } else { -1.0 } };
    let sign = problem.sign;
    let solver = ArmijoCondition::new(1e-4)
        .and_then(|c| BacktrackingLineSearch::new(c).rho(0.5))
        .and_then(|ls| LBFGS::new(ls, 10).with_tolerance_grad(1e-12))
        .map_err(|e| Error::Domain(e.to_string()))?;
    let x0 = vec![0.0; samples.grid().n_steps];
    let res = Executor::new(problem, solver)
        .configure(|s| {
            let s = s.param(x0).max_iters(max_iters);
            match target {
                Some(t) => s.target_cost(-sign * t),
                None => s,
            }
        })
        .run()
        .map_err(|e| Error::Domain(format!("bin ascent failed: {e}")))?;
    let best = res.state().get_best_param().cloned().unwrap_or_else(|| vec![0.0; samples.grid().n_steps]);
    let problem = BinProblem { op, base: samples, objective, sign: 1.0 };
    let out = problem.samples(&best);
    let j = bin_gradient(op, &out, objective).0;
    Ok((out, j))
}
