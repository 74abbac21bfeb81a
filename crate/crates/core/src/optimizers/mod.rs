//! Evolutionary optimizers over real-coded genomes: a traditional GA,
//! ACROMUSE for per-draw noisy fitness, and NSGA-II for Pareto fronts, plus
//! diversity measures, front seeding and gradient polishing of field genes.
//!
//! Scalar fitness is maximized; NSGA-II objectives are minimized. Every run
//! is a pure function of its configuration and seed.

mod acromuse;
mod evaluators;
mod instances;
mod nsga2;
mod operators;
mod polish;
mod seeding;
mod tga;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::FieldBounds;

pub use acromuse::{acromuse_optimize, per_instance_table, AcromuseConfig, AcromuseResult};
pub use instances::{compare_instances, instance_matrix, ColumnMapping, InstanceReport, InstanceTables, LabelledTable, MappingReport};
pub use evaluators::{MomentFitness, MomentPoint, NoisyAmplitudeFitness, NominalFitness, ParetoFront, ParetoPoint};
pub use nsga2::{crowding_distance, dominates, fast_non_dominated_sort, is_non_dominated, nsga2_optimize, MultiIndividual, Nsga2Result};
pub use operators::{hpd, polynomial_mutation, sbx_crossover, spd, tournament};
pub use polish::polish_chromosome;
pub use seeding::seed_from_front;
pub use tga::{tga_optimize, GaResult};

/// Box of gene values; periodic genes wrap instead of clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl GeneSpace {
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self { lower: vec![lower; n], upper: vec![upper; n], periodic: vec![false; n] }
    }

    /// Frequencies (clipped) followed by phases (wrapped onto `[0, 2 pi)`).
    pub fn for_field(bounds: &FieldBounds, n_modes: usize) -> Self {
        let ranges = bounds.gene_ranges(n_modes);
        Self {
            lower: ranges.iter().map(|r| r.0).collect(),
            upper: ranges.iter().map(|r| r.1).collect(),
            periodic: (0..2 * n_modes).map(|g| g >= n_modes).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn range(&self, g: usize) -> f64 {
        self.upper[g] - self.lower[g]
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.len() != self.periodic.len() {
            return Err(validation("gene space vectors differ in length"));
        }
        if self.is_empty() {
            return Err(validation("gene space is empty"));
        }
        if (0..self.len()).any(|g| !(self.range(g) > 0.0 && self.range(g).is_finite())) {
            return Err(validation("every gene needs a positive, finite range"));
        }
        Ok(())
    }

    /// Clips ordinary genes and wraps periodic genes onto `[lower, upper)`.
    pub fn repair(&self, genes: &mut [f64]) {
        for (g, x) in genes.iter_mut().enumerate() {
            let (lo, hi) = (self.lower[g], self.upper[g]);
            if self.periodic[g] {
                let w = lo + (*x - lo).rem_euclid(hi - lo);
                *x = if w >= hi { lo } else { w };
            } else {
                *x = x.clamp(lo, hi);
            }
        }
    }

    pub fn contains(&self, genes: &[f64]) -> bool {
        genes.iter().enumerate().all(|(g, &x)| {
            if self.periodic[g] {
                x >= self.lower[g] && x < self.upper[g]
            } else {
                x >= self.lower[g] && x <= self.upper[g]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GAConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `None` means `1 / genes`.
    pub mutation_prob: Option<f64>,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub seed: u64,
    pub sbx_eta: f64,
    pub poly_eta: f64,
    /// Stop once the best fitness reaches this value.
    pub target_fitness: Option<f64>,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population_size: 60,
            generations: 300,
            crossover_prob: 0.9,
            mutation_prob: None,
            tournament_size: 5,
            elitism_count: 2,
            seed: 0,
            sbx_eta: 10.0,
            poly_eta: 20.0,
            target_fitness: None,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return Err(validation("population size must be even and at least 4"));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(validation("crossover probability must lie in [0, 1]"));
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(validation("mutation probability must lie in [0, 1]"));
            }
        }
        if self.tournament_size < 2 {
            return Err(validation("tournament size must be at least 2"));
        }
        if self.elitism_count >= self.population_size {
            return Err(validation("elitism count must be below the population size"));
        }
        if !(self.sbx_eta >= 0.0 && self.poly_eta >= 0.0) {
            return Err(validation("distribution indices must be non-negative"));
        }
        Ok(())
    }

    pub fn mutation_prob_for(&self, genes: usize) -> f64 {
        self.mutation_prob.unwrap_or(1.0 / genes as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub fitness: f64,
    /// Seed of the noise draw behind `fitness`.
    pub eval_seed: u64,
}

/// Scalar fitness to maximize.
pub trait Fitness: Sync {
    fn space(&self) -> &GeneSpace;

    /// Fitness of `genes`; `seed` drives any noise draw.
    fn evaluate(&self, genes: &[f64], seed: u64) -> Result<f64>;

    fn is_noisy(&self) -> bool {
        false
    }
}

/// Objective vector to minimize.
pub trait MultiFitness: Sync {
    fn space(&self) -> &GeneSpace;

    fn n_objectives(&self) -> usize;

    fn evaluate(&self, genes: &[f64], seed: u64) -> Result<Vec<f64>>;

    /// Higher-precision evaluation applied to the final front.
    fn refine(&self, genes: &[f64], seed: u64) -> Result<Vec<f64>> {
        self.evaluate(genes, seed)
    }
}

/// Per-generation record of fitness, diversity and adaptive parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub best_ever: f64,
    pub spd: f64,
    pub hpd: f64,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub tournament_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiversityTrace {
    pub records: Vec<GenerationRecord>,
}

impl DiversityTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("generation,best,mean,best_ever,spd,hpd,crossover_prob,mutation_prob,tournament_size\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                r.generation, r.best, r.mean, r.best_ever, r.spd, r.hpd, r.crossover_prob, r.mutation_prob, r.tournament_size
            ));
        }
        s
    }

    pub fn last(&self) -> Option<&GenerationRecord> {
        self.records.last()
    }
}

/// SplitMix64 finalizer over the run seed and a (generation, index) pair.
pub fn derive_seed(seed: u64, generation: u64, index: u64) -> u64 {
    let mut z = seed ^ generation.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Variation RNG of one generation.
pub(crate) fn generation_rng(seed: u64, generation: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, generation as u64, u64::MAX))
}

pub(crate) fn evaluate_all<F: Fitness + ?Sized>(
    fitness: &F,
    population: &[Vec<f64>],
    seed: u64,
    generation: usize,
) -> Result<Vec<Individual>> {
    use rayon::prelude::*;
    population
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let s = derive_seed(seed, generation as u64, i as u64);
            let f = fitness.evaluate(g, s)?;
            if !f.is_finite() {
                return Err(crate::error::Error::Domain(format!("non-finite fitness {f}")));
            }
            Ok(Individual { genes: g.clone(), fitness: f, eval_seed: s })
        })
        .collect()
}

pub(crate) fn random_population(space: &GeneSpace, size: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = generation_rng(seed, usize::MAX);
    (0..size)
        .map(|_| (0..space.len()).map(|g| rng.random_range(space.lower[g]..space.upper[g])).collect())
        .collect()
}

/// Initial genomes: the given ones (repaired, truncated or padded with
/// random genomes) or a uniform random population.
pub(crate) fn initial_population(space: &GeneSpace, size: usize, seed: u64, initial: Option<&[Vec<f64>]>) -> Result<Vec<Vec<f64>>> {
    let mut pop = match initial {
        None => return Ok(random_population(space, size, seed)),
        Some(init) => init.iter().take(size).cloned().collect::<Vec<_>>(),
    };
    if pop.iter().any(|g| g.len() != space.len()) {
        return Err(validation("initial genome length does not match the gene space"));
    }
    for g in &mut pop {
        space.repair(g);
    }
    let missing = size - pop.len();
    pop.extend(random_population(space, missing, seed));
    Ok(pop)
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repair_clips_and_wraps() {
        let s = GeneSpace::for_field(&FieldBounds::default(), 2);
        let mut g = vec![-1.0, 9.0, -0.5, 7.0];
        s.repair(&mut g);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[1], 4.0);
        assert!((g[2] - (std::f64::consts::TAU - 0.5)).abs() < 1e-15);
        assert!((g[3] - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);
        assert!(s.contains(&g));
    }

    #[test]
    fn config_validation() {
        assert!(GAConfig::default().validate().is_ok());
        assert!(GAConfig { population_size: 5, ..Default::default() }.validate().is_err());
        assert!(GAConfig { tournament_size: 1, ..Default::default() }.validate().is_err());
        assert!(GAConfig { crossover_prob: 1.5, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(2, 0, 0));
    }
}
