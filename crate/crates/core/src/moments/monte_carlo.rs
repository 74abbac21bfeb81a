use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{validation, Result};
use crate::field::ControlField;
use crate::linalg::C64;
use crate::moments::MomentSpec;
use crate::propagator::{check_durations, FieldSamples, ModeBasis, SplitOperator, TimeGrid};
use crate::system::QuantumSystem;
use crate::uncertainty::ParameterTarget;

/// Floor on calibrated sample counts.
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n_samples: usize,
    pub seed: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

impl McEstimate {
    /// Half-width of the two-sided interval on the mean at `confidence`.
    pub fn halfwidth(&self, confidence: f64) -> f64 {
        z_value(confidence) * self.se_mean
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    /// Correlation matrix of the gaussian parameters, in spec order.
    /// Non-gaussian laws are drawn independently.
    pub correlation: Option<Vec<Vec<f64>>>,
}

/// Prepared sampler for `P_{to,from}` under a moment spec.
pub struct McSampler {
    system: QuantumSystem,
    grid: TimeGrid,
    from: usize,
    to: usize,
    spec: MomentSpec,
    nominal: Vec<f64>,
    amplitudes: Vec<f64>,
    basis: Option<ModeBasis>,
    samples: FieldSamples,
    cholesky: Option<DMatrix<f64>>,
}

impl McSampler {
    pub fn new(
        system: &QuantumSystem,
        field: &ControlField,
        grid: &TimeGrid,
        from: usize,
        to: usize,
        spec: &MomentSpec,
        options: &McOptions,
    ) -> Result<Self> {
        check_durations(field, grid)?;
        spec.validate(system, field)?;
        let n = system.dimension();
        if from >= n || to >= n {
            return Err(validation(format!("transition {from}->{to} out of range for N = {n}")));
        }
        let cholesky = match &options.correlation {
            None => None,
            Some(rows) => {
                let k = spec.parameters.len();
                if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                    return Err(validation(format!("correlation matrix must be {k} x {k}")));
                }
                let m = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
                if (0..k).any(|i| (m[(i, i)] - 1.0).abs() > 1e-12) || (&m - m.transpose()).amax() > 1e-12 {
                    return Err(validation("correlation matrix must be symmetric with unit diagonal"));
                }
                Some(
                    m.cholesky()
                        .ok_or_else(|| validation("correlation matrix is not positive definite"))?
                        .l(),
                )
            }
        };
        let has_modes = spec.parameters.iter().any(|p| matches!(p.target, ParameterTarget::ModeAmplitude { .. }));
        Ok(Self {
            system: system.clone(),
            grid: *grid,
            from,
            to,
            spec: spec.clone(),
            nominal: spec.parameters.iter().map(|p| p.target.nominal(system, field)).collect(),
            amplitudes: field.amplitudes(),
            basis: has_modes.then(|| ModeBasis::new(field, *grid)),
            samples: FieldSamples::new(field, *grid),
            cholesky,
        })
    }

    /// Parameter vector of draw `index`, from its own ChaCha8 stream.
    pub fn draw(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let ps = &self.spec.parameters;
        let raw: Vec<f64> = match &self.cholesky {
            None => ps.iter().map(|p| p.distribution.sample_raw(&mut rng)).collect(),
            Some(l) => {
                let z = DVector::from_fn(ps.len(), |_, _| StandardNormal.sample(&mut rng));
                let zc = l * z;
                ps.iter().zip(zc.iter()).map(|(p, &z)| p.distribution.from_standard_normal(z, &mut rng)).collect()
            }
        };
        ps.iter().zip(raw).zip(&self.nominal).map(|((p, x), &t)| p.distribution.realize(t, x)).collect()
    }

    /// `P_{to,from}` with the spec's parameters set to `values`.
    pub fn probability(&self, values: &[f64]) -> f64 {
        let mut mu = self.system.dipole().clone();
        let mut amps = None;
        for (p, &v) in self.spec.parameters.iter().zip(values) {
            match p.target {
                ParameterTarget::Dipole { i, j } => {
                    mu[(i, j)] = v;
                    mu[(j, i)] = v;
                }
                ParameterTarget::ModeAmplitude { k } => {
                    amps.get_or_insert_with(|| self.amplitudes.clone())[k] = v;
                }
            }
        }
        let op = SplitOperator::real(self.system.energies(), &mu, &self.grid);
        let owned;
        let samples = match (&amps, &self.basis) {
            (Some(a), Some(b)) => {
                owned = b.samples(a);
                &owned
            }
            _ => &self.samples,
        };
        let mut col = vec![C64::default(); self.system.dimension()];
        col[self.from] = C64::new(1.0, 0.0);
        op.evolve(samples, &mut col);
        col[self.to].norm_sqr()
    }

    /// Mean and variance of `P` over `n_samples` draws. Bit-identical for a
    /// given seed regardless of thread count.
    pub fn estimate(&self, n_samples: usize, seed: u64) -> Result<McEstimate> {
        if n_samples < 2 {
            return Err(validation("Monte-Carlo estimate needs at least 2 samples"));
        }
        let xs: Vec<f64> = (0..n_samples as u64)
            .into_par_iter()
            .map(|i| self.probability(&self.draw(seed, i)))
            .collect();
        Ok(summarize(&xs, seed))
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn summarize(xs: &[f64], seed: u64) -> McEstimate {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let d2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let m2 = pairwise_sum(&d2) / n;
    let d4: Vec<f64> = d2.iter().map(|x| x * x).collect();
    let m4 = pairwise_sum(&d4) / n;
    let variance = m2 * n / (n - 1.0);
    McEstimate {
        n_samples: xs.len(),
        seed,
        mean,
        variance,
        se_mean: (variance / n).sqrt(),
        se_variance: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

/// Independent-parameter Monte-Carlo estimate of `P_{to,from}`.
#[allow(clippy::too_many_arguments)]
pub fn mc_estimate(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    from: usize,
    to: usize,
    spec: &MomentSpec,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_estimate_with(system, field, grid, from, to, spec, n_samples, seed, &McOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn mc_estimate_with(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    from: usize,
    to: usize,
    spec: &MomentSpec,
    n_samples: usize,
    seed: u64,
    options: &McOptions,
) -> Result<McEstimate> {
    McSampler::new(system, field, grid, from, to, spec, options)?.estimate(n_samples, seed)
}

fn z_value(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 * (1.0 + confidence))
}

/// `n = ceil((z sqrt(var) / halfwidth)^2)`, at least [`MIN_SAMPLES`].
pub fn calibrate_samples(target_halfwidth: f64, variance_estimate: f64, confidence: f64) -> Result<usize> {
    if !(target_halfwidth > 0.0) {
        return Err(validation("target half-width must be positive"));
    }
    if !(variance_estimate >= 0.0 && variance_estimate.is_finite()) {
        return Err(validation("variance estimate must be finite and non-negative"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(validation("confidence must lie in (0, 1)"));
    }
    let n = (z_value(confidence) * variance_estimate.sqrt() / target_halfwidth).powi(2).ceil();
    Ok((n as usize).max(MIN_SAMPLES))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Mode;
    use crate::uncertainty::{ParameterDistribution, UncertainParameter};

    fn setup() -> (QuantumSystem, ControlField, TimeGrid) {
        let sys = crate::system::example_system();
        let f = ControlField::new(
            vec![Mode { amplitude: 0.05, frequency: 1.5, phase: 0.3 }, Mode { amplitude: 0.05, frequency: 0.5, phase: 2.0 }],
            20.0,
        )
        .unwrap();
        (sys, f, TimeGrid::new(250, 20.0).unwrap())
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate_samples(0.01, 0.0, 0.95).unwrap(), 16);
        assert_eq!(calibrate_samples(0.01, 0.01, 0.95).unwrap(), 385);
        let a = calibrate_samples(0.001, 0.01, 0.95).unwrap() as f64;
        let b = calibrate_samples(0.002, 0.01, 0.95).unwrap() as f64;
        assert!((a / b - 4.0).abs() < 0.01);
        assert!(calibrate_samples(0.0, 0.01, 0.95).is_err());
    }

    #[test]
    fn degenerate_laws_give_nominal() {
        let (sys, f, g) = setup();
        let spec = MomentSpec::new(vec![
            UncertainParameter::new(ParameterTarget::dipole(0, 3), ParameterDistribution::relative_point_mass()),
            UncertainParameter::new(ParameterTarget::ModeAmplitude { k: 1 }, ParameterDistribution::relative_point_mass()),
        ]);
        let p0 = crate::propagator::transition_probability(&sys, &f, &g, 0, 3).unwrap();
        let r = mc_estimate(&sys, &f, &g, 0, 3, &spec, 8, 1).unwrap();
        assert!((r.mean - p0).abs() < 1e-14);
        assert!(r.variance < 1e-28);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let (sys, f, g) = setup();
        let spec = MomentSpec::new(vec![UncertainParameter::new(
            ParameterTarget::dipole(0, 3),
            ParameterDistribution::relative_gaussian(0.05),
        )]);
        let a = mc_estimate(&sys, &f, &g, 0, 3, &spec, 64, 9).unwrap();
        let b = mc_estimate(&sys, &f, &g, 0, 3, &spec, 64, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, mc_estimate(&sys, &f, &g, 0, 3, &spec, 64, 10).unwrap());
    }

    #[test]
    fn correlation_is_validated() {
        let (sys, f, g) = setup();
        let spec = MomentSpec::new(vec![
            UncertainParameter::new(ParameterTarget::dipole(0, 3), ParameterDistribution::relative_gaussian(0.05)),
            UncertainParameter::new(ParameterTarget::dipole(0, 1), ParameterDistribution::relative_gaussian(0.05)),
        ]);
        let bad = McOptions { correlation: Some(vec![vec![1.0, 1.5], vec![1.5, 1.0]]) };
        assert!(McSampler::new(&sys, &f, &g, 0, 3, &spec, &bad).is_err());
        let full = McOptions { correlation: Some(vec![vec![1.0, 0.999999], vec![0.999999, 1.0]]) };
        let s = McSampler::new(&sys, &f, &g, 0, 3, &spec, &full).unwrap();
        let v = s.draw(3, 17);
        // near-perfect correlation: identical relative factors
        assert!((v[0] / 1.0 - v[1] / 2.0).abs() < 1e-2);
    }
}
