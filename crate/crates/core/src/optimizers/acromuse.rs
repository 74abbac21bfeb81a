use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::optimizers::operators::{hpd, polynomial_mutation, sbx_crossover, spd, tournament};
use crate::optimizers::tga::{ranked, record};
use crate::optimizers::{evaluate_all, generation_rng, initial_population, mean, DiversityTrace, Fitness, GAConfig, Individual};

/// Uniform-diversity ceiling `1 / sqrt(12)`.
const UNIFORM_DIVERSITY: f64 = 0.288_675_134_594_812_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcromuseConfig {
    /// Population size, generations, seed, elitism and distribution indices;
    /// its fixed probabilities and tournament size are ignored.
    pub ga: GAConfig,
    pub pc_min: f64,
    pub pc_max: f64,
    /// `None` means `1 / genes`.
    pub pm_min: Option<f64>,
    pub pm_max: f64,
    pub tau_min: usize,
    pub tau_max: usize,
    pub spd_ref: f64,
    pub hpd_ref: f64,
    /// Distribution index of the exploratory polynomial mutation.
    pub mutation_eta: f64,
}

impl Default for AcromuseConfig {
    fn default() -> Self {
        Self {
            ga: GAConfig::default(),
            pc_min: 0.6,
            pc_max: 0.95,
            pm_min: None,
            pm_max: 0.25,
            tau_min: 2,
            tau_max: 5,
            spd_ref: UNIFORM_DIVERSITY,
            hpd_ref: UNIFORM_DIVERSITY,
            mutation_eta: 2.0,
        }
    }
}

impl AcromuseConfig {
    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        let pm_min = self.pm_min.unwrap_or(0.0);
        if !(0.0 <= self.pc_min && self.pc_min <= self.pc_max && self.pc_max <= 1.0) {
            return Err(validation("crossover bounds must satisfy 0 <= pc_min <= pc_max <= 1"));
        }
        if !(0.0 <= pm_min && pm_min <= self.pm_max && self.pm_max <= 1.0) {
            return Err(validation("mutation bounds must satisfy 0 <= pm_min <= pm_max <= 1"));
        }
        if !(2 <= self.tau_min && self.tau_min <= self.tau_max) {
            return Err(validation("tournament bounds must satisfy 2 <= tau_min <= tau_max"));
        }
        if !(self.mutation_eta >= 0.0) {
            return Err(validation("mutation distribution index must be non-negative"));
        }
        if !(self.spd_ref > 0.0 && self.hpd_ref > 0.0) {
            return Err(validation("diversity references must be positive"));
        }
        Ok(())
    }

    pub fn crossover_prob(&self, spd: f64) -> f64 {
        self.pc_min + (self.pc_max - self.pc_min) * (spd / self.spd_ref).min(1.0)
    }

    /// Generation mutation scale; strictly decreasing in SPD below `spd_ref`.
    pub fn mutation_scale(&self, spd: f64, genes: usize) -> f64 {
        let pm_min = self.pm_min.unwrap_or(1.0 / genes as f64);
        pm_min + (self.pm_max - pm_min) * (1.0 - (spd / self.spd_ref).min(1.0))
    }

    pub fn tournament_size(&self, hpd: f64) -> usize {
        let span = (self.tau_max - self.tau_min) as f64;
        self.tau_min + (span * (1.0 - (hpd / self.hpd_ref).min(1.0))).round() as usize
    }
}

/// Per-individual mutation probability: the full generation scale below the
/// mean fitness, tapering towards `floor` at the best.
fn individual_mutation(scale: f64, floor: f64, f: f64, f_mean: f64, f_max: f64) -> f64 {
    if f < f_mean {
        scale
    } else {
        (scale * (f_max - f) / (f_max - f_mean + 1e-12)).max(floor)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcromuseResult {
    /// Final population with its last noisy fitness draws.
    pub population: Vec<Individual>,
    pub trace: DiversityTrace,
}

impl AcromuseResult {
    /// Individual with the highest last draw.
    pub fn best(&self) -> &Individual {
        self.population.iter().max_by(|a, b| a.fitness.total_cmp(&b.fitness)).expect("non-empty population")
    }
}

/// Adaptive GA for per-draw noisy fitness. Every generation the whole
/// population, elite included, is evaluated under fresh noise; crossover
/// follows SPD, mutation follows SPD and individual fitness, and tournament
/// pressure follows HPD.
pub fn acromuse_optimize<F: Fitness + ?Sized>(
    fitness: &F,
    config: &AcromuseConfig,
    initial: Option<&[Vec<f64>]>,
) -> Result<AcromuseResult> {
    config.validate()?;
    let space = fitness.space();
    space.validate()?;
    let ga = &config.ga;
    let n = ga.population_size;
    let mut genes = initial_population(space, n, ga.seed, initial)?;
    let mut trace = DiversityTrace::default();
    let mut best_ever = f64::NEG_INFINITY;
    let mut pop = Vec::new();
    let pm_floor = config.pm_min.unwrap_or(1.0 / space.len() as f64);
    for generation in 0..=ga.generations {
        pop = evaluate_all(fitness, &genes, ga.seed, generation)?;
        let fit: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
        let s = spd(&genes, space)?;
        let h = hpd(&genes, &fit, space)?;
        let pc = config.crossover_prob(s);
        let pm = config.mutation_scale(s, space.len());
        let tau = config.tournament_size(h);
        best_ever = fit.iter().cloned().fold(best_ever, f64::max);
        trace.records.push(record(generation, &pop, best_ever, fitness, pc, pm, tau)?);
        if generation == ga.generations {
            break;
        }
        let mut rng = generation_rng(ga.seed, generation + 1);
        let (f_mean, f_max) = (mean(fit.iter().cloned()), fit.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let order = ranked(&pop);
        let mut next: Vec<Vec<f64>> = order[..ga.elitism_count].iter().map(|&i| pop[i].genes.clone()).collect();
        while next.len() < n {
            let (ia, ib) = (tournament(&fit, tau, &mut rng), tournament(&fit, tau, &mut rng));
            let (a, b) = (&pop[ia].genes, &pop[ib].genes);
            let (mut c1, mut c2) =
                if rng.random::<f64>() < pc { sbx_crossover(a, b, ga.sbx_eta, space, &mut rng) } else { (a.clone(), b.clone()) };
            polynomial_mutation(&mut c1, individual_mutation(pm, pm_floor, fit[ia], f_mean, f_max), config.mutation_eta, space, &mut rng);
            polynomial_mutation(&mut c2, individual_mutation(pm, pm_floor, fit[ib], f_mean, f_max), config.mutation_eta, space, &mut rng);
            next.push(c1);
            next.push(c2);
        }
        next.truncate(n);
        genes = next;
    }
    Ok(AcromuseResult { population: pop, trace })
}

/// `table[r][c]`: fitness of solution `r` under noise instance `c`; every
/// solution sees the same draw for a given instance.
pub fn per_instance_table<F: Fitness + ?Sized>(fitness: &F, solutions: &[Vec<f64>], instance_seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
    solutions
        .par_iter()
        .map(|g| instance_seeds.iter().map(|&s| fitness.evaluate(g, s)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_laws() {
        let c = AcromuseConfig::default();
        assert!((c.crossover_prob(0.0) - 0.6).abs() < 1e-15);
        assert!((c.crossover_prob(1.0) - 0.95).abs() < 1e-15);
        assert!(c.mutation_scale(0.05, 14) > c.mutation_scale(0.1, 14));
        assert_eq!(c.tournament_size(0.0), 5);
        assert_eq!(c.tournament_size(c.hpd_ref), 2);
        assert_eq!(individual_mutation(0.2, 0.05, 0.1, 0.5, 1.0), 0.2);
        assert!((individual_mutation(0.2, 0.05, 0.75, 0.5, 1.0) - 0.1).abs() < 1e-9);
        assert_eq!(individual_mutation(0.2, 0.05, 1.0, 0.5, 1.0), 0.05);
        assert_eq!(individual_mutation(0.2, 0.05, 1.0, 1.0, 1.0), 0.05);
    }
}
