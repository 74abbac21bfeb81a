use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::condition::ArmijoCondition;
use argmin::solver::linesearch::BacktrackingLineSearch;
use argmin::solver::quasinewton::LBFGS;

use crate::error::{Error, Result};
use crate::field::{Chromosome, FieldBounds};
use crate::pmp::gene_gradient;
use crate::propagator::{ObjectiveSpec, TimeGrid};
use crate::system::QuantumSystem;

struct GeneProblem<'a> {
    system: &'a QuantumSystem,
    template: &'a Chromosome,
    duration: f64,
    grid: &'a TimeGrid,
    objective: &'a ObjectiveSpec,
    sign: f64,
}

impl GeneProblem<'_> {
    fn eval(&self, genes: &[f64]) -> std::result::Result<(f64, Vec<f64>), argmin::core::Error> {
        let mut c = self.template.clone();
        c.set_genes(genes);
        let (j, g) = gene_gradient(self.system, &c, self.duration, self.grid, self.objective)?;
        Ok((-self.sign * j, g.iter().map(|v| -self.sign * v).collect()))
    }
}

impl CostFunction for GeneProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(x)?.0)
    }
}

impl Gradient for GeneProblem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval(x)?.1)
    }
}

/// L-BFGS refinement of a chromosome's frequencies and phases at fixed
/// amplitude. The result is repaired into `bounds` and never worse than the
/// input.
pub fn polish_chromosome(
    system: &QuantumSystem,
    chromosome: &Chromosome,
    duration: f64,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
    bounds: &FieldBounds,
    max_iters: u64,
) -> Result<(Chromosome, f64)> {
    bounds.validate()?;
    let sign = if objective.is_maximized() { 1.0 } else { -1.0 };
    let start = gene_gradient(system, chromosome, duration, grid, objective)?.0;
    let problem = GeneProblem { system, template: chromosome, duration, grid, objective, sign };
    let solver = ArmijoCondition::new(1e-4)
        .and_then(|c| BacktrackingLineSearch::new(c).rho(0.5))
        .and_then(|ls| LBFGS::new(ls, 7).with_tolerance_grad(1e-12))
        .map_err(|e| Error::Domain(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.param(chromosome.genes()).max_iters(max_iters))
        .run()
        .map_err(|e| Error::Domain(format!("gene polish failed: {e}")))?;
    let mut out = chromosome.clone();
    if let Some(best) = res.state().get_best_param() {
        out.set_genes(best);
    }
    bounds.repair(&mut out);
    let j = gene_gradient(system, &out, duration, grid, objective)?.0;
    if sign * j < sign * start {
        return Ok((chromosome.clone(), start));
    }
    Ok((out, j))
}
