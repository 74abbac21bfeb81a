use rand::Rng;

use crate::error::{validation, Result};
use crate::optimizers::GeneSpace;

/// Simulated binary crossover applied gene-wise with probability 1/2;
/// children are repaired into the space.
pub fn sbx_crossover<R: Rng + ?Sized>(a: &[f64], b: &[f64], eta: f64, space: &GeneSpace, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let (mut c1, mut c2) = (a.to_vec(), b.to_vec());
    for g in 0..a.len() {
        if rng.random::<f64>() >= 0.5 || a[g] == b[g] {
            continue;
        }
        let u: f64 = rng.random();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        c1[g] = 0.5 * ((1.0 + beta) * a[g] + (1.0 - beta) * b[g]);
        c2[g] = 0.5 * ((1.0 - beta) * a[g] + (1.0 + beta) * b[g]);
    }
    space.repair(&mut c1);
    space.repair(&mut c2);
    (c1, c2)
}

/// Polynomial mutation of each gene with probability `p`, scaled by the
/// gene range; the result is repaired into the space.
pub fn polynomial_mutation<R: Rng + ?Sized>(genes: &mut [f64], p: f64, eta: f64, space: &GeneSpace, rng: &mut R) {
    for g in 0..genes.len() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let u: f64 = rng.random();
        let delta = if u < 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0)) - 1.0
        } else {
            1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta + 1.0))
        };
        genes[g] += delta * space.range(g);
    }
    space.repair(genes);
}

/// Index of the fittest of `size` uniformly drawn contestants.
pub fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

fn weighted_diversity(population: &[Vec<f64>], weights: &[f64], space: &GeneSpace) -> Result<f64> {
    if population.is_empty() {
        return Err(validation("diversity of an empty population"));
    }
    space.validate()?;
    let n_genes = space.len();
    let mut total = 0.0;
    for g in 0..n_genes {
        // shifted by the first member so identical genes give exactly zero
        let x0 = population[0][g];
        let r = space.range(g);
        let var: f64 = if space.periodic[g] {
            let k = std::f64::consts::TAU / r;
            let (sn, cs) = population.iter().zip(weights).fold((0.0, 0.0), |(sn, cs), (x, w)| {
                let a = k * (x[g] - x0);
                (sn + w * a.sin(), cs + w * a.cos())
            });
            let centroid = sn.atan2(cs) / k;
            let wrap = |d: f64| d - r * (d / r).round();
            population.iter().zip(weights).map(|(x, w)| w * wrap(x[g] - x0 - centroid).powi(2)).sum()
        } else {
            let centroid: f64 = population.iter().zip(weights).map(|(x, w)| w * (x[g] - x0)).sum();
            population.iter().zip(weights).map(|(x, w)| w * (x[g] - x0 - centroid).powi(2)).sum()
        };
        total += var.max(0.0).sqrt() / r;
    }
    Ok((total / n_genes as f64).clamp(0.0, 1.0))
}

/// Standard population diversity: mean over genes of the per-gene standard
/// deviation about the centroid, relative to the gene range. Periodic genes
/// use the circular mean and wrapped deviations.
pub fn spd(population: &[Vec<f64>], space: &GeneSpace) -> Result<f64> {
    let w = vec![1.0 / population.len().max(1) as f64; population.len()];
    weighted_diversity(population, &w, space)
}

/// Healthy population diversity: as [`spd`] with weights `f_i / sum f`.
/// Fitness is shifted to be non-negative; zero total falls back to uniform.
pub fn hpd(population: &[Vec<f64>], fitness: &[f64], space: &GeneSpace) -> Result<f64> {
    if fitness.len() != population.len() {
        return Err(validation("one fitness per individual is required"));
    }
    let low = fitness.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let shifted: Vec<f64> = fitness.iter().map(|f| f - low).collect();
    let total: f64 = shifted.iter().sum();
    let w: Vec<f64> = if total > 0.0 {
        shifted.iter().map(|f| f / total).collect()
    } else {
        vec![1.0 / population.len().max(1) as f64; population.len()]
    };
    weighted_diversity(population, &w, space)
}
