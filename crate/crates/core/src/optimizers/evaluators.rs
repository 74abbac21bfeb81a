//! Fitness functions over `[w_1..w_K, phi_1..phi_K]` genomes at a fixed
//! amplitude for the transition `from -> to`.

use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::field::{Chromosome, ControlField, FieldBounds};
use crate::linalg::C64;
use crate::moments::{calibrate_samples, McOptions, McSampler, MomentSpec};
use crate::optimizers::{derive_seed, is_non_dominated, Fitness, GeneSpace, MultiFitness, Nsga2Result};
use crate::propagator::{FieldSamples, SplitOperator, TimeGrid};
use crate::system::QuantumSystem;

/// Noise-free `P_{to,from}` of the chromosome's field.
pub struct NominalFitness {
    pub system: QuantumSystem,
    pub amplitude: f64,
    pub duration: f64,
    pub grid: TimeGrid,
    pub from: usize,
    pub to: usize,
    space: GeneSpace,
    op: SplitOperator,
}

impl NominalFitness {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        system: &QuantumSystem,
        amplitude: f64,
        duration: f64,
        grid: TimeGrid,
        from: usize,
        to: usize,
        bounds: &FieldBounds,
        n_modes: usize,
    ) -> Result<Self> {
        bounds.validate()?;
        let n = system.dimension();
        if from >= n || to >= n {
            return Err(validation(format!("transition {from}->{to} out of range for N = {n}")));
        }
        if n_modes == 0 {
            return Err(validation("at least one field mode is required"));
        }
        if !(bounds.amp_min..=bounds.amp_max).contains(&amplitude) {
            return Err(validation(format!("amplitude {amplitude} outside the configured bounds")));
        }
        if (grid.duration - duration).abs() > 1e-12 * duration.max(1.0) {
            return Err(validation("grid and field durations differ"));
        }
        Ok(Self {
            system: system.clone(),
            amplitude,
            duration,
            grid,
            from,
            to,
            space: GeneSpace::for_field(bounds, n_modes),
            op: SplitOperator::real(system.energies(), system.dipole(), &grid),
        })
    }

    pub fn chromosome(&self, genes: &[f64]) -> Result<Chromosome> {
        if genes.len() != self.space.len() {
            return Err(validation("genome length does not match the field"));
        }
        Chromosome::from_genes(genes, self.amplitude)
    }

    pub fn field(&self, genes: &[f64]) -> Result<ControlField> {
        Ok(self.chromosome(genes)?.to_field(self.duration))
    }

    pub fn probability(&self, genes: &[f64]) -> Result<f64> {
        Ok(self.samples_probability(&FieldSamples::new(&self.field(genes)?, self.grid)))
    }

    /// Probability with mode `k` scaled to amplitude `amplitudes[k]`.
    pub fn probability_with_amplitudes(&self, genes: &[f64], amplitudes: &[f64]) -> Result<f64> {
        let field = self.field(genes)?;
        if amplitudes.len() != field.n_modes() {
            return Err(validation("one amplitude per mode is required"));
        }
        let factors: Vec<C64> = amplitudes.iter().map(|&a| C64::new(a / self.amplitude, 0.0)).collect();
        if self.amplitude == 0.0 {
            return Ok(self.samples_probability(&FieldSamples::new(&field.with_amplitudes(amplitudes), self.grid)));
        }
        Ok(self.samples_probability(&FieldSamples::with_mode_factors(&field, self.grid, Some(&factors))))
    }

    fn samples_probability(&self, samples: &FieldSamples) -> f64 {
        let mut psi = vec![C64::default(); self.system.dimension()];
        psi[self.from] = C64::new(1.0, 0.0);
        self.op.evolve(samples, &mut psi);
        psi[self.to].norm_sqr()
    }
}

impl Fitness for NominalFitness {
    fn space(&self) -> &GeneSpace {
        &self.space
    }

    fn evaluate(&self, genes: &[f64], _seed: u64) -> Result<f64> {
        self.probability(genes)
    }
}

/// Per-draw fitness: every mode amplitude is `A (1 + sigma z_k)` with
/// `z_k` standard normal drawn from the evaluation seed.
pub struct NoisyAmplitudeFitness {
    pub nominal: NominalFitness,
    pub sigma: f64,
}

impl NoisyAmplitudeFitness {
    pub fn new(nominal: NominalFitness, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(validation("noise level must be finite and non-negative"));
        }
        Ok(Self { nominal, sigma })
    }

    /// Amplitude realization of noise instance `seed`.
    pub fn amplitudes(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.nominal.space.len() / 2)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.nominal.amplitude * (1.0 + self.sigma * z)
            })
            .collect()
    }
}

impl Fitness for NoisyAmplitudeFitness {
    fn space(&self) -> &GeneSpace {
        &self.nominal.space
    }

    fn evaluate(&self, genes: &[f64], seed: u64) -> Result<f64> {
        if self.sigma == 0.0 {
            return self.nominal.probability(genes);
        }
        self.nominal.probability_with_amplitudes(genes, &self.amplitudes(seed))
    }

    fn is_noisy(&self) -> bool {
        self.sigma > 0.0
    }
}

/// Nominal value and Monte Carlo moments of one genome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub j_nom: f64,
    pub expected: f64,
    pub variance: f64,
    pub n_samples: usize,
    /// Confidence halfwidth of `expected` actually achieved.
    pub achieved_halfwidth: f64,
    pub seed: u64,
}

/// Objectives `(-J_nom, -E[P], var P)` under a moment spec, with the sample
/// count calibrated from a pilot run to a target halfwidth of `E[P]`.
pub struct MomentFitness {
    pub nominal: NominalFitness,
    pub spec: MomentSpec,
    pub options: McOptions,
    pub halfwidth: f64,
    pub confidence: f64,
    pub pilot_samples: usize,
    pub max_samples: usize,
    /// Halfwidth divisor used by [`MultiFitness::refine`].
    pub refine_factor: f64,
    refined: Mutex<Vec<(Vec<f64>, u64, MomentPoint)>>,
}

impl MomentFitness {
    pub fn new(nominal: NominalFitness, spec: MomentSpec, halfwidth: f64, confidence: f64) -> Result<Self> {
        if !(halfwidth > 0.0 && halfwidth.is_finite()) {
            return Err(validation("target halfwidth must be positive"));
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(validation("confidence must lie in (0, 1)"));
        }
        let probe = nominal.field(&nominal.space.lower.clone())?;
        spec.validate(&nominal.system, &probe)?;
        Ok(Self {
            nominal,
            spec,
            options: McOptions::default(),
            halfwidth,
            confidence,
            pilot_samples: 32,
            max_samples: 100_000,
            refine_factor: 4.0,
            refined: Mutex::new(Vec::new()),
        })
    }

    /// Moments of `genes` at target halfwidth `halfwidth`.
    pub fn point(&self, genes: &[f64], seed: u64, halfwidth: f64) -> Result<MomentPoint> {
        let nf = &self.nominal;
        let field = nf.field(genes)?;
        let sampler = McSampler::new(&nf.system, &field, &nf.grid, nf.from, nf.to, &self.spec, &self.options)?;
        let pilot = sampler.estimate(self.pilot_samples, derive_seed(seed, 0, 1))?;
        let n = calibrate_samples(halfwidth, pilot.variance, self.confidence)?.min(self.max_samples);
        let est = sampler.estimate(n, seed)?;
        Ok(MomentPoint {
            j_nom: nf.probability(genes)?,
            expected: est.mean,
            variance: est.variance,
            n_samples: n,
            achieved_halfwidth: est.halfwidth(self.confidence),
            seed,
        })
    }

    /// The point computed by [`MultiFitness::refine`] for these arguments.
    pub fn refined_point(&self, genes: &[f64], seed: u64) -> Result<MomentPoint> {
        if let Some(p) = self.lookup(genes, seed) {
            return Ok(p);
        }
        let p = self.point(genes, seed, self.halfwidth / self.refine_factor)?;
        self.refined.lock().expect("refine cache").push((genes.to_vec(), seed, p));
        Ok(p)
    }

    fn lookup(&self, genes: &[f64], seed: u64) -> Option<MomentPoint> {
        let cache = self.refined.lock().expect("refine cache");
        cache.iter().find(|(g, s, _)| *s == seed && g == genes).map(|e| e.2)
    }
}

fn objectives(p: &MomentPoint) -> Vec<f64> {
    vec![-p.j_nom, -p.expected, p.variance]
}

impl MultiFitness for MomentFitness {
    fn space(&self) -> &GeneSpace {
        &self.nominal.space
    }

    fn n_objectives(&self) -> usize {
        3
    }

    fn evaluate(&self, genes: &[f64], seed: u64) -> Result<Vec<f64>> {
        Ok(objectives(&self.point(genes, seed, self.halfwidth)?))
    }

    fn refine(&self, genes: &[f64], seed: u64) -> Result<Vec<f64>> {
        Ok(objectives(&self.refined_point(genes, seed)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub chromosome: Chromosome,
    pub j_nom: f64,
    pub expected: f64,
    pub variance: f64,
    pub sample_count: usize,
    /// Stated confidence halfwidth of `expected`.
    pub halfwidth: f64,
    pub achieved_halfwidth: f64,
    pub seed: u64,
}

/// Certified non-dominated set under (max J_nom, max E[P], min var P).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<ParetoPoint>,
    pub duration: f64,
    pub from: usize,
    pub to: usize,
    pub confidence: f64,
}

impl ParetoFront {
    /// Front of an NSGA-II run over `fitness`, with refined moments.
    pub fn from_nsga2(fitness: &MomentFitness, result: &Nsga2Result) -> Result<Self> {
        let points = result
            .front
            .iter()
            .map(|ind| {
                let p = fitness.refined_point(&ind.genes, ind.eval_seed)?;
                Ok(ParetoPoint {
                    chromosome: fitness.nominal.chromosome(&ind.genes)?,
                    j_nom: p.j_nom,
                    expected: p.expected,
                    variance: p.variance,
                    sample_count: p.n_samples,
                    halfwidth: fitness.halfwidth,
                    achieved_halfwidth: p.achieved_halfwidth,
                    seed: p.seed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let front = Self {
            points,
            duration: fitness.nominal.duration,
            from: fitness.nominal.from,
            to: fitness.nominal.to,
            confidence: fitness.confidence,
        };
        front.certify()?;
        Ok(front)
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| vec![-p.j_nom, -p.expected, p.variance]).collect()
    }

    /// Independent pairwise non-domination check.
    pub fn certify(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Domain("Pareto front is empty".into()));
        }
        if !is_non_dominated(&self.objectives()) {
            return Err(Error::Domain("Pareto front contains a dominated point".into()));
        }
        Ok(())
    }

    pub fn genomes(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.chromosome.genes()).collect()
    }

    /// Index of the point with the largest nominal objective.
    pub fn nominal_best(&self) -> usize {
        (0..self.points.len()).max_by(|&a, &b| self.points[a].j_nom.total_cmp(&self.points[b].j_nom)).unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_csv(&self) -> String {
        let k = self.points.first().map_or(0, |p| p.chromosome.n_modes());
        let mut s = String::from("index,j_nom,expected,variance,sample_count,halfwidth,achieved_halfwidth,seed");
        for m in 0..k {
            s.push_str(&format!(",w{}", m + 1));
        }
        for m in 0..k {
            s.push_str(&format!(",phi{}", m + 1));
        }
        s.push_str(",amplitude\n");
        for (i, p) in self.points.iter().enumerate() {
            s.push_str(&format!(
                "{i},{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e},{}",
                p.j_nom, p.expected, p.variance, p.sample_count, p.halfwidth, p.achieved_halfwidth, p.seed
            ));
            for g in p.chromosome.genes() {
                s.push_str(&format!(",{g:.17e}"));
            }
            s.push_str(&format!(",{:.17e}\n", p.chromosome.fixed_amplitude));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::example_system;

    fn nominal(a: f64) -> NominalFitness {
        NominalFitness::new(&example_system(), a, 40.0, TimeGrid::new(500, 40.0).unwrap(), 0, 3, &FieldBounds::default(), 7)
            .unwrap()
    }

    const X1: [f64; 14] = [
        1.7384, 1.0448, 1.3715, 1.3669, 1.5256, 0.7038, 3.2220, 2.4826, 1.9833, 0.2558, 6.1403, 5.5389, 1.6142, 4.9542,
    ];

    #[test]
    fn nominal_matches_transition_probability() {
        let f = nominal(0.15);
        let c = Chromosome::from_genes(&X1, 0.15).unwrap();
        let p = crate::propagator::transition_probability(&f.system, &c.to_field(40.0), &f.grid, 0, 3).unwrap();
        assert!((f.evaluate(&X1, 9).unwrap() - p).abs() < 1e-14);
    }

    #[test]
    fn zero_noise_is_nominal_and_noise_is_seeded() {
        let f = NoisyAmplitudeFitness::new(nominal(0.15), 0.0).unwrap();
        assert!(!f.is_noisy());
        assert_eq!(f.evaluate(&X1, 1).unwrap(), f.nominal.probability(&X1).unwrap());
        let g = NoisyAmplitudeFitness::new(nominal(0.15), 0.1).unwrap();
        assert_eq!(g.evaluate(&X1, 5).unwrap(), g.evaluate(&X1, 5).unwrap());
        assert_ne!(g.evaluate(&X1, 5).unwrap(), g.evaluate(&X1, 6).unwrap());
        let direct = g.nominal.probability_with_amplitudes(&X1, &g.amplitudes(5)).unwrap();
        let field = g.nominal.field(&X1).unwrap().with_amplitudes(&g.amplitudes(5));
        let oracle = crate::propagator::transition_probability(&g.nominal.system, &field, &g.nominal.grid, 0, 3).unwrap();
        assert!((direct - oracle).abs() < 1e-13);
    }
}
