//! Finite-difference parameter sensitivities and the Hessian rank test at
//! the landscape top.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::{Chromosome, ControlField};
use crate::propagator::{evaluate_objective, ObjectiveSpec, TimeGrid};
use crate::system::QuantumSystem;
use crate::uncertainty::{apply_parameters, ParameterTarget};

/// Gradient max-norm below which sensitivities switch to curvature.
pub const CRITICALITY_TOL: f64 = 1e-4;

/// Every nonzero coupling and every mode amplitude.
pub fn candidate_parameters(system: &QuantumSystem, field: &ControlField) -> Vec<ParameterTarget> {
    let mut out: Vec<ParameterTarget> = system
        .couplings()
        .into_iter()
        .map(|(i, j, _)| ParameterTarget::dipole(i, j))
        .collect();
    out.extend((0..field.n_modes()).map(|k| ParameterTarget::ModeAmplitude { k }));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityMode {
    Gradient,
    Curvature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub target: ParameterTarget,
    pub label: String,
    pub nominal: f64,
    /// `dJ/dtheta`.
    pub gradient: f64,
    /// `d^2J/dtheta^2`, computed in curvature mode only.
    pub curvature: Option<f64>,
    /// Ranking score: `|gradient|` or `|curvature|`.
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub mode: SensitivityMode,
    pub objective_value: f64,
    pub gradient_max_norm: f64,
    /// Parameters with `score >= threshold * max score`, descending.
    pub significant: Vec<Sensitivity>,
    /// Every candidate, descending.
    pub all: Vec<Sensitivity>,
}

fn fd_step(nominal: f64) -> f64 {
    1e-4 * nominal.abs().max(1e-2)
}

/// Central-difference sensitivities of `J` to each candidate parameter.
pub fn significant_parameters(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
    candidates: &[ParameterTarget],
    threshold: f64,
) -> Result<SensitivityReport> {
    if !(threshold > 0.0) {
        return Err(validation("sensitivity threshold must be positive"));
    }
    for t in candidates {
        t.validate(system, field.n_modes())?;
    }
    let j0 = evaluate_objective(system, field, grid, objective)?;
    let eval = |t: &ParameterTarget, v: f64| {
        let (s, f) = apply_parameters(system, field, std::slice::from_ref(t), &[v]);
        evaluate_objective(&s, &f, grid, objective)
    };
    let probes: Vec<(f64, f64, f64, f64)> = candidates
        .par_iter()
        .map(|t| {
            let x = t.nominal(system, field);
            let h = fd_step(x);
            let (jp, jm) = (eval(t, x + h)?, eval(t, x - h)?);
            Ok((x, h, jp, jm))
        })
        .collect::<Result<_>>()?;
    let grad_norm = probes.iter().map(|&(_, h, jp, jm)| ((jp - jm) / (2.0 * h)).abs()).fold(0.0, f64::max);
    let mode = if grad_norm < CRITICALITY_TOL { SensitivityMode::Curvature } else { SensitivityMode::Gradient };
    let mut all: Vec<Sensitivity> = candidates
        .iter()
        .zip(&probes)
        .map(|(t, &(x, h, jp, jm))| {
            let gradient = (jp - jm) / (2.0 * h);
            let curvature = (mode == SensitivityMode::Curvature).then(|| (jp - 2.0 * j0 + jm) / (h * h));
            let score = curvature.map_or(gradient.abs(), f64::abs);
            Sensitivity { target: *t, label: t.label(), nominal: x, gradient, curvature, score }
        })
        .collect();
    all.sort_by(|a, b| b.score.total_cmp(&a.score));
    let top = all.first().map_or(0.0, |s| s.score);
    let significant = all.iter().filter(|s| top > 0.0 && s.score >= threshold * top).cloned().collect();
    Ok(SensitivityReport { mode, objective_value: j0, gradient_max_norm: grad_norm, significant, all })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianOptions {
    /// Finite-difference step on every gene.
    pub step: f64,
    /// Gene-gradient max-norm required for the check to run.
    pub gradient_tol: f64,
    /// Eigenvalues above `rank_tol * max |eigenvalue|` count towards the rank.
    pub rank_tol: f64,
}

impl Default for HessianOptions {
    fn default() -> Self {
        Self { step: 1e-4, gradient_tol: 1e-2, rank_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HessianStatus {
    Checked,
    Skipped { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianReport {
    pub status: HessianStatus,
    pub objective_value: f64,
    pub gradient_max_norm: f64,
    /// Eigenvalues of the gene Hessian, descending by magnitude.
    pub eigenvalues: Vec<f64>,
    pub numerical_rank: usize,
    /// `2N - 2` for state-to-state transfer.
    pub rank_bound: usize,
}

impl HessianReport {
    pub fn within_bound(&self) -> bool {
        self.status == HessianStatus::Checked && self.numerical_rank <= self.rank_bound
    }
}

/// Finite-difference Hessian of `J` over the `2K` genes (frequencies, phases).
pub fn gene_hessian(
    system: &QuantumSystem,
    chromosome: &Chromosome,
    duration: f64,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
    step: f64,
) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
    let genes = chromosome.genes();
    let n = genes.len();
    let eval = |d: &[(usize, f64)]| -> Result<f64> {
        let mut g = genes.clone();
        for &(k, v) in d {
            g[k] += v;
        }
        let c = Chromosome::from_genes(&g, chromosome.fixed_amplitude)?;
        evaluate_objective(system, &c.to_field(duration), grid, objective)
    };
    let j0 = eval(&[])?;
    let h = step;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let entries: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            if a == b {
                let (jp, jm) = (eval(&[(a, h)])?, eval(&[(a, -h)])?);
                Ok(((jp - jm) / (2.0 * h), (jp - 2.0 * j0 + jm) / (h * h)))
            } else {
                let pp = eval(&[(a, h), (b, h)])?;
                let pm = eval(&[(a, h), (b, -h)])?;
                let mp = eval(&[(a, -h), (b, h)])?;
                let mm = eval(&[(a, -h), (b, -h)])?;
                Ok((0.0, (pp - pm - mp + mm) / (4.0 * h * h)))
            }
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    for (&(a, b), &(g, v)) in pairs.iter().zip(&entries) {
        if a == b {
            grad[a] = g;
        }
        hess[(a, b)] = v;
        hess[(b, a)] = v;
    }
    Ok((j0, grad, hess))
}

/// Numerical rank of the gene Hessian, compared against `2N - 2`. Skipped
/// unless the gene gradient is below `options.gradient_tol`.
pub fn hessian_rank_check(
    system: &QuantumSystem,
    chromosome: &Chromosome,
    duration: f64,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
    options: &HessianOptions,
) -> Result<HessianReport> {
    let n = system.dimension();
    let (j0, grad, hess) = gene_hessian(system, chromosome, duration, grid, objective, options.step)?;
    let gnorm = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let rank_bound = 2 * n - 2;
    if gnorm > options.gradient_tol {
        return Ok(HessianReport {
            status: HessianStatus::Skipped {
                reason: format!(
                    "gene gradient max-norm {gnorm:.3e} exceeds {:.1e}; the field is not near-critical",
                    options.gradient_tol
                ),
            },
            objective_value: j0,
            gradient_max_norm: gnorm,
            eigenvalues: Vec::new(),
            numerical_rank: 0,
            rank_bound,
        });
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(hess).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let top = eig.first().map_or(0.0, |v| v.abs());
    let rank = eig.iter().filter(|v| v.abs() > options.rank_tol * top).count();
    Ok(HessianReport {
        status: HessianStatus::Checked,
        objective_value: j0,
        gradient_max_norm: gnorm,
        eigenvalues: eig,
        numerical_rank: rank,
        rank_bound,
    })
}
