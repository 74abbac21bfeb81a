//! Multi-mode cosine control fields and the frequency/phase genome used by
//! the evolutionary optimizers.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// One spectral component `A cos(w t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// `eps(t) = sum_k A_k cos(w_k t + phi_k)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    pub modes: Vec<Mode>,
    pub duration: f64,
}

impl ControlField {
    pub fn new(modes: Vec<Mode>, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(validation("field duration must be positive and finite"));
        }
        if modes
            .iter()
            .any(|m| !(m.amplitude.is_finite() && m.frequency.is_finite() && m.phase.is_finite()))
        {
            return Err(validation("field mode parameters must be finite"));
        }
        Ok(Self { modes, duration })
    }

    /// Field with every amplitude set to zero.
    pub fn zero(n_modes: usize, duration: f64) -> Self {
        let modes = (0..n_modes)
            .map(|k| Mode { amplitude: 0.0, frequency: 1.0 + k as f64, phase: 0.0 })
            .collect();
        Self { modes, duration }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Evaluates the field, rejecting times outside `[0, T]`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t} outside the field window [0, {}]",
                self.duration
            )));
        }
        Ok(self.value_at(t))
    }

    #[inline]
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * (m.frequency * t + m.phase).cos())
            .sum()
    }

    /// Copy with mode amplitudes replaced.
    pub fn with_amplitudes(&self, amplitudes: &[f64]) -> Self {
        let mut out = self.clone();
        for (m, &a) in out.modes.iter_mut().zip(amplitudes) {
            m.amplitude = a;
        }
        out
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.amplitude).collect()
    }
}

/// Gene bounds for frequencies and amplitudes. Phases always live on
/// `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub freq_min: f64,
    pub freq_max: f64,
    pub amp_min: f64,
    pub amp_max: f64,
}

impl Default for FieldBounds {
    fn default() -> Self {
        Self { freq_min: 0.05, freq_max: 4.0, amp_min: 0.0, amp_max: 0.5 }
    }
}

impl FieldBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_max > self.freq_min) {
            return Err(validation("frequency bounds must have positive range"));
        }
        if !(self.amp_max >= self.amp_min && self.amp_min >= 0.0) {
            return Err(validation("amplitude bounds must satisfy 0 <= min <= max"));
        }
        Ok(())
    }

    /// Lower/upper bound of gene `g` in a `2K` genome.
    pub fn gene_range(&self, n_modes: usize, g: usize) -> (f64, f64) {
        if g < n_modes {
            (self.freq_min, self.freq_max)
        } else {
            (0.0, TAU)
        }
    }

    pub fn gene_ranges(&self, n_modes: usize) -> Vec<(f64, f64)> {
        (0..2 * n_modes).map(|g| self.gene_range(n_modes, g)).collect()
    }

    /// Clamps frequency genes into bounds and wraps phase genes onto `[0, 2 pi)`.
    pub fn repair(&self, chromosome: &mut Chromosome) {
        for w in &mut chromosome.frequencies {
            *w = w.clamp(self.freq_min, self.freq_max);
        }
        for p in &mut chromosome.phases {
            *p = wrap_phase(*p);
        }
    }

    pub fn contains(&self, chromosome: &Chromosome) -> bool {
        chromosome
            .frequencies
            .iter()
            .all(|w| (self.freq_min..=self.freq_max).contains(w))
            && chromosome.phases.iter().all(|p| (0.0..TAU).contains(p))
            && (self.amp_min..=self.amp_max).contains(&chromosome.fixed_amplitude)
    }
}

/// Wraps an angle onto `[0, 2 pi)`.
pub fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// GA genome: `K` frequencies followed by `K` phases, sharing one amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
    pub fixed_amplitude: f64,
}

impl Chromosome {
    pub fn new(frequencies: Vec<f64>, phases: Vec<f64>, fixed_amplitude: f64) -> Result<Self> {
        if frequencies.len() != phases.len() {
            return Err(validation(format!(
                "chromosome has {} frequencies but {} phases",
                frequencies.len(),
                phases.len()
            )));
        }
        Ok(Self { frequencies, phases, fixed_amplitude })
    }

    /// Splits a flat `[w_1..w_K, phi_1..phi_K]` gene vector.
    pub fn from_genes(genes: &[f64], fixed_amplitude: f64) -> Result<Self> {
        if genes.len() % 2 != 0 {
            return Err(validation("gene vector length must be even"));
        }
        let k = genes.len() / 2;
        Self::new(genes[..k].to_vec(), genes[k..].to_vec(), fixed_amplitude)
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn genes(&self) -> Vec<f64> {
        let mut g = self.frequencies.clone();
        g.extend_from_slice(&self.phases);
        g
    }

    pub fn set_genes(&mut self, genes: &[f64]) {
        let k = self.n_modes();
        self.frequencies.copy_from_slice(&genes[..k]);
        self.phases.copy_from_slice(&genes[k..]);
    }

    pub fn to_field(&self, duration: f64) -> ControlField {
        let modes = self
            .frequencies
            .iter()
            .zip(&self.phases)
            .map(|(&frequency, &phase)| Mode { amplitude: self.fixed_amplitude, frequency, phase })
            .collect();
        ControlField { modes, duration }
    }

    /// Inverse of [`Chromosome::to_field`]. Fails when the field's modes do
    /// not share one amplitude.
    pub fn from_field(field: &ControlField) -> Result<Self> {
        let amp = field.modes.first().map_or(0.0, |m| m.amplitude);
        if field.modes.iter().any(|m| m.amplitude != amp) {
            return Err(validation("field amplitudes differ; not representable as a chromosome"));
        }
        Self::new(
            field.modes.iter().map(|m| m.frequency).collect(),
            field.modes.iter().map(|m| m.phase).collect(),
            amp,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn constant_mode() {
        let f = ControlField::new(vec![Mode { amplitude: 1.0, frequency: 0.0, phase: 0.0 }], 40.0).unwrap();
        for t in [0.0, 3.7, 40.0] {
            assert_eq!(f.evaluate(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn quadrature_phase_vanishes() {
        let f = ControlField::new(vec![Mode { amplitude: 0.15, frequency: 1.0, phase: FRAC_PI_2 }], 40.0)
            .unwrap();
        assert!(f.evaluate(0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn outside_window_is_domain_error() {
        let f = ControlField::zero(2, 10.0);
        assert!(matches!(f.evaluate(-1e-9), Err(Error::Domain(_))));
        assert!(matches!(f.evaluate(10.5), Err(Error::Domain(_))));
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(-1e-300), 0.0);
        assert!((wrap_phase(-FRAC_PI_2) - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_phase(7.0) - (7.0 - TAU)).abs() < 1e-15);
    }

    #[test]
    fn mismatched_chromosome_rejected() {
        assert!(Chromosome::new(vec![1.0, 2.0], vec![0.0], 0.15).is_err());
        assert!(Chromosome::from_genes(&[1.0, 2.0, 3.0], 0.15).is_err());
    }

    proptest! {
        #[test]
        fn chromosome_field_round_trip(
            freqs in proptest::collection::vec(0.05f64..4.0, 1..9),
            seed_phase in 0.0f64..TAU,
            amp in 0.0f64..0.5,
        ) {
            let phases: Vec<f64> = freqs.iter().enumerate()
                .map(|(k, _)| wrap_phase(seed_phase + k as f64)).collect();
            let c = Chromosome::new(freqs, phases, amp).unwrap();
            prop_assert!(FieldBounds::default().contains(&c));
            let back = Chromosome::from_field(&c.to_field(40.0)).unwrap();
            prop_assert_eq!(back, c);
        }

        #[test]
        fn evaluation_is_linear_in_each_amplitude(
            amps in proptest::collection::vec(0.0f64..0.5, 3),
            freqs in proptest::collection::vec(0.05f64..4.0, 3),
            t in 0.0f64..40.0,
            k in 0usize..3,
        ) {
            let modes: Vec<Mode> = amps.iter().zip(&freqs)
                .map(|(&a, &w)| Mode { amplitude: a, frequency: w, phase: 0.3 * w }).collect();
            let f = ControlField::new(modes.clone(), 40.0).unwrap();
            let mut doubled = amps.clone();
            doubled[k] *= 2.0;
            let g = f.with_amplitudes(&doubled);
            let extra = amps[k] * (freqs[k] * t + 0.3 * freqs[k]).cos();
            let lhs = g.evaluate(t).unwrap();
            let rhs = f.evaluate(t).unwrap() + extra;
            prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()));
        }
    }
}

#[cfg(test)]
mod table_field_tests {
    use super::*;

    #[test]
    fn seven_mode_field_matches_high_precision_sum() {
        // tests/oracles/field.py, 50-digit term-by-term summation
        let genes = [
            1.7384, 1.0448, 1.3715, 1.3669, 1.5256, 0.7038, 3.2220, 2.4826, 1.9833, 0.2558,
            6.1403, 5.5389, 1.6142, 4.9542,
        ];
        let c = Chromosome::from_genes(&genes, 0.15).unwrap();
        let v = c.to_field(40.0).evaluate(1.0).unwrap();
        let expect = -0.220_243_752_178_398_92;
        assert!((v - expect).abs() < 1e-15, "{v}");
    }
}
