use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::optimizers::operators::{hpd, polynomial_mutation, sbx_crossover, spd, tournament};
use crate::optimizers::{
    evaluate_all, generation_rng, initial_population, mean, DiversityTrace, Fitness, GAConfig, GenerationRecord, Individual,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaResult {
    /// Best individual ever evaluated.
    pub best: Individual,
    pub population: Vec<Individual>,
    pub trace: DiversityTrace,
    pub generations_run: usize,
}

pub(crate) fn record(
    generation: usize,
    pop: &[Individual],
    best_ever: f64,
    fitness: &(impl Fitness + ?Sized),
    pc: f64,
    pm: f64,
    tau: usize,
) -> Result<GenerationRecord> {
    let genes: Vec<Vec<f64>> = pop.iter().map(|i| i.genes.clone()).collect();
    let fit: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
    Ok(GenerationRecord {
        generation,
        best: fit.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean: mean(fit.iter().cloned()),
        best_ever,
        spd: spd(&genes, fitness.space())?,
        hpd: hpd(&genes, &fit, fitness.space())?,
        crossover_prob: pc,
        mutation_prob: pm,
        tournament_size: tau,
    })
}

pub(crate) fn ranked(pop: &[Individual]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&a, &b| pop[b].fitness.total_cmp(&pop[a].fitness));
    idx
}

/// Generational GA with fixed tournament selection, SBX crossover,
/// polynomial mutation and elitism. In noisy mode the elite is re-evaluated
/// under fresh noise every generation.
pub fn tga_optimize<F: Fitness + ?Sized>(fitness: &F, config: &GAConfig, initial: Option<&[Vec<f64>]>) -> Result<GaResult> {
    config.validate()?;
    let space = fitness.space();
    space.validate()?;
    let pm = config.mutation_prob_for(space.len());
    let n = config.population_size;
    let mut pop = evaluate_all(fitness, &initial_population(space, n, config.seed, initial)?, config.seed, 0)?;
    let mut best = pop[ranked(&pop)[0]].clone();
    let mut trace = DiversityTrace::default();
    trace.records.push(record(0, &pop, best.fitness, fitness, config.crossover_prob, pm, config.tournament_size)?);
    let mut generation = 0;
    while generation < config.generations && config.target_fitness.is_none_or(|t| best.fitness < t) {
        generation += 1;
        let mut rng = generation_rng(config.seed, generation);
        let order = ranked(&pop);
        let fit: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
        let elites: Vec<Individual> = order[..config.elitism_count].iter().map(|&i| pop[i].clone()).collect();
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(n);
        while children.len() < n - elites.len() {
            let a = &pop[tournament(&fit, config.tournament_size, &mut rng)].genes;
            let b = &pop[tournament(&fit, config.tournament_size, &mut rng)].genes;
            let (mut c1, mut c2) = if rng.random::<f64>() < config.crossover_prob {
                sbx_crossover(a, b, config.sbx_eta, space, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            polynomial_mutation(&mut c1, pm, config.poly_eta, space, &mut rng);
            polynomial_mutation(&mut c2, pm, config.poly_eta, space, &mut rng);
            children.push(c1);
            children.push(c2);
        }
        children.truncate(n - elites.len());
        let next = if fitness.is_noisy() {
            let mut genes: Vec<Vec<f64>> = elites.iter().map(|e| e.genes.clone()).collect();
            genes.extend(children);
            evaluate_all(fitness, &genes, config.seed, generation)?
        } else {
            let mut next = elites;
            next.extend(evaluate_all(fitness, &children, config.seed, generation)?);
            next
        };
        pop = next;
        let top = &pop[ranked(&pop)[0]];
        if top.fitness > best.fitness {
            best = top.clone();
        }
        trace.records.push(record(generation, &pop, best.fitness, fitness, config.crossover_prob, pm, config.tournament_size)?);
    }
    Ok(GaResult { best, population: pop, trace, generations_run: generation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::GeneSpace;

    struct Sphere(GeneSpace);

    impl Fitness for Sphere {
        fn space(&self) -> &GeneSpace {
            &self.0
        }

        fn evaluate(&self, g: &[f64], _: u64) -> Result<f64> {
            Ok(-g.iter().map(|x| x * x).sum::<f64>())
        }
    }

    #[test]
    fn sphere_is_minimized() {
        let f = Sphere(GeneSpace::uniform(14, -5.0, 5.0));
        let cfg = GAConfig { generations: 200, seed: 7, ..Default::default() };
        let r = tga_optimize(&f, &cfg, None).unwrap();
        assert!(-r.best.fitness <= 1e-3, "{}", -r.best.fitness);
        let be: Vec<f64> = r.trace.records.iter().map(|x| x.best_ever).collect();
        assert!(be.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn same_seed_same_trace() {
        let f = Sphere(GeneSpace::uniform(4, -1.0, 1.0));
        let cfg = GAConfig { generations: 20, population_size: 20, seed: 3, ..Default::default() };
        let a = tga_optimize(&f, &cfg, None).unwrap();
        let b = tga_optimize(&f, &cfg, None).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best, b.best);
    }
}
