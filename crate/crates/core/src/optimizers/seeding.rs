use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{validation, Result};
use crate::optimizers::{derive_seed, GeneSpace};

/// Relative jitter of padded copies, as a fraction of each gene's range.
pub const SEED_JITTER: f64 = 0.02;

/// Initial population built from front genomes: the first `size` members
/// unchanged, padded by jittered copies of members taken in turn.
pub fn seed_from_front(front: &[Vec<f64>], space: &GeneSpace, size: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if front.is_empty() {
        return Err(validation("cannot seed from an empty front"));
    }
    space.validate()?;
    if front.iter().any(|g| g.len() != space.len()) {
        return Err(validation("front genome length does not match the gene space"));
    }
    let mut pop: Vec<Vec<f64>> = front.iter().take(size).cloned().collect();
    for g in &mut pop {
        space.repair(g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX - 2, 0));
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let mut i = 0;
    while pop.len() < size {
        let mut g = front[i % front.len()].clone();
        for (k, x) in g.iter_mut().enumerate() {
            *x += SEED_JITTER * space.range(k) * z.sample(&mut rng);
        }
        space.repair(&mut g);
        pop.push(g);
        i += 1;
    }
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_front_is_unchanged() {
        let s = GeneSpace::uniform(2, 0.0, 1.0);
        let front = vec![vec![0.1, 0.2], vec![0.3, 0.4], vec![0.5, 0.6], vec![0.7, 0.8]];
        assert_eq!(seed_from_front(&front, &s, 4, 1).unwrap(), front);
    }

    #[test]
    fn single_member_is_padded_within_bounds() {
        let s = GeneSpace::uniform(3, 0.0, 1.0);
        let front = vec![vec![0.0, 0.5, 1.0]];
        let pop = seed_from_front(&front, &s, 10, 3).unwrap();
        assert_eq!(pop.len(), 10);
        assert_eq!(pop[0], front[0]);
        assert!(pop.iter().all(|g| s.contains(g)));
        assert!(pop[1..].iter().all(|g| g != &front[0]));
        assert!(seed_from_front(&[], &s, 10, 3).is_err());
    }
}
