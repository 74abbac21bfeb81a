use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::operators::{polynomial_mutation, sbx_crossover};
use crate::optimizers::{derive_seed, generation_rng, initial_population, GAConfig, MultiFitness};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndividual {
    pub genes: Vec<f64>,
    /// Minimized objectives.
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding_distance: f64,
    pub eval_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Nsga2Result {
    /// Non-dominated points after refinement.
    pub front: Vec<MultiIndividual>,
    pub population: Vec<MultiIndividual>,
    pub generations_run: usize,
}

/// `a` dominates `b` under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Fronts of indices, best first.
pub fn fast_non_dominated_sort(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for p in 0..n {
        for q in 0..n {
            if dominates(&objectives[p], &objectives[q]) {
                dominated_by[p].push(q);
            } else if dominates(&objectives[q], &objectives[p]) {
                count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order).
pub fn crowding_distance(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let mut d = vec![0.0; front.len()];
    if front.len() <= 2 {
        return vec![f64::INFINITY; front.len()];
    }
    let m = objectives[front[0]].len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| objectives[front[a]][k].total_cmp(&objectives[front[b]][k]));
        let lo = objectives[front[order[0]]][k];
        let hi = objectives[front[*order.last().unwrap()]][k];
        d[order[0]] = f64::INFINITY;
        d[*order.last().unwrap()] = f64::INFINITY;
        if hi > lo {
            for w in 1..order.len() - 1 {
                d[order[w]] += (objectives[front[order[w + 1]]][k] - objectives[front[order[w - 1]]][k]) / (hi - lo);
            }
        }
    }
    d
}

/// Independent pairwise check that no point dominates another.
pub fn is_non_dominated(objectives: &[Vec<f64>]) -> bool {
    objectives
        .iter()
        .enumerate()
        .all(|(i, a)| objectives.iter().enumerate().all(|(j, b)| i == j || !dominates(b, a)))
}

fn evaluate<F: MultiFitness + ?Sized>(f: &F, genes: &[Vec<f64>], seed: u64, generation: u64, refine: bool) -> Result<Vec<MultiIndividual>> {
    genes
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let s = derive_seed(seed, generation, i as u64);
            let objectives = if refine { f.refine(g, s)? } else { f.evaluate(g, s)? };
            if objectives.len() != f.n_objectives() || objectives.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("invalid objective vector {objectives:?}")));
            }
            Ok(MultiIndividual { genes: g.clone(), objectives, rank: 0, crowding_distance: 0.0, eval_seed: s })
        })
        .collect()
}

/// Assigns rank and crowding and keeps the best `n`.
fn select(mut pool: Vec<MultiIndividual>, n: usize) -> Vec<MultiIndividual> {
    let objs: Vec<Vec<f64>> = pool.iter().map(|i| i.objectives.clone()).collect();
    let fronts = fast_non_dominated_sort(&objs);
    let mut keep = Vec::with_capacity(n);
    for (rank, front) in fronts.iter().enumerate() {
        let cd = crowding_distance(&objs, front);
        for (&i, &d) in front.iter().zip(&cd) {
            pool[i].rank = rank;
            pool[i].crowding_distance = d;
        }
        if keep.len() + front.len() <= n {
            keep.extend(front.iter().copied());
        } else {
            let mut rest: Vec<usize> = front.clone();
            rest.sort_by(|&a, &b| pool[b].crowding_distance.total_cmp(&pool[a].crowding_distance));
            keep.extend(rest.into_iter().take(n - keep.len()));
        }
        if keep.len() == n {
            break;
        }
    }
    keep.iter().map(|&i| pool[i].clone()).collect()
}

fn better(a: &MultiIndividual, b: &MultiIndividual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding_distance > b.crowding_distance)
}

/// NSGA-II with binary (rank, crowding) tournaments, SBX and polynomial
/// mutation. The final first front is deduplicated, re-evaluated with
/// [`MultiFitness::refine`] and filtered for non-domination.
pub fn nsga2_optimize<F: MultiFitness + ?Sized>(f: &F, config: &GAConfig, initial: Option<&[Vec<f64>]>) -> Result<Nsga2Result> {
    config.validate()?;
    let space = f.space();
    space.validate()?;
    let n = config.population_size;
    let pm = config.mutation_prob_for(space.len());
    let mut pop = select(evaluate(f, &initial_population(space, n, config.seed, initial)?, config.seed, 0, false)?, n);
    for generation in 1..=config.generations {
        let mut rng = generation_rng(config.seed, generation);
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if better(&pop[b], &pop[a]) { b } else { a }
        };
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let (ia, ib) = (pick(&mut rng), pick(&mut rng));
            let (a, b) = (&pop[ia].genes, &pop[ib].genes);
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
        children.truncate(n);
        let mut pool = pop;
        pool.extend(evaluate(f, &children, config.seed, generation as u64, false)?);
        pop = select(pool, n);
    }
    let mut first: Vec<Vec<f64>> = Vec::new();
    for ind in pop.iter().filter(|i| i.rank == 0) {
        if !first.contains(&ind.genes) {
            first.push(ind.genes.clone());
        }
    }
    let refined = evaluate(f, &first, config.seed, u64::MAX - 1, true)?;
    let objs: Vec<Vec<f64>> = refined.iter().map(|i| i.objectives.clone()).collect();
    let front_idx = fast_non_dominated_sort(&objs).into_iter().next().unwrap_or_default();
    let cd = crowding_distance(&objs, &front_idx);
    let front = front_idx
        .iter()
        .zip(cd)
        .map(|(&i, d)| MultiIndividual { rank: 0, crowding_distance: d, ..refined[i].clone() })
        .collect();
    Ok(Nsga2Result { front, population: pop, generations_run: config.generations })
}
