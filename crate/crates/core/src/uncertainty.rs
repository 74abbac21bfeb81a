//! Uncertain parameters and their distributions.
//!
//! A parameter is either a dipole element (one physical coupling, two matrix
//! entries) or a field-mode amplitude. Its law is given either for the
//! parameter itself (`relative = false`) or for a multiplicative factor on
//! the nominal value (`relative = true`, `theta = nominal * xi`).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::ControlField;
use crate::system::QuantumSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterTarget {
    /// Coupling between levels `i < j` (zero-indexed).
    Dipole { i: usize, j: usize },
    /// Amplitude of field mode `k` (zero-indexed).
    ModeAmplitude { k: usize },
}

impl ParameterTarget {
    pub fn dipole(i: usize, j: usize) -> Self {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        ParameterTarget::Dipole { i, j }
    }

    pub fn validate(&self, system: &QuantumSystem, n_modes: usize) -> Result<()> {
        match *self {
            ParameterTarget::Dipole { i, j } => {
                if i >= j {
                    return Err(validation(format!("dipole target ({i},{j}) must have i < j")));
                }
                if j >= system.dimension() {
                    return Err(validation(format!("dipole target ({i},{j}) out of range")));
                }
            }
            ParameterTarget::ModeAmplitude { k } => {
                if k >= n_modes {
                    return Err(validation(format!("mode amplitude target {k} out of range")));
                }
            }
        }
        Ok(())
    }

    /// Nominal value of the target.
    pub fn nominal(&self, system: &QuantumSystem, field: &ControlField) -> f64 {
        match *self {
            ParameterTarget::Dipole { i, j } => system.dipole()[(i, j)],
            ParameterTarget::ModeAmplitude { k } => field.modes[k].amplitude,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ParameterTarget::Dipole { i, j } => format!("mu[{i},{j}]"),
            ParameterTarget::ModeAmplitude { k } => format!("A[{k}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DistributionKind {
    Gaussian { mean: f64, sigma: f64 },
    Uniform { lower: f64, upper: f64 },
    /// Degenerate law; used for the zero-width limit.
    PointMass { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterDistribution {
    #[serde(flatten)]
    pub kind: DistributionKind,
    #[serde(default)]
    pub relative: bool,
}

impl ParameterDistribution {
    pub fn gaussian(mean: f64, sigma: f64) -> Self {
        Self { kind: DistributionKind::Gaussian { mean, sigma }, relative: false }
    }

    pub fn uniform(lower: f64, upper: f64) -> Self {
        Self { kind: DistributionKind::Uniform { lower, upper }, relative: false }
    }

    pub fn point_mass(value: f64) -> Self {
        Self { kind: DistributionKind::PointMass { value }, relative: false }
    }

    /// Multiplicative factor `xi ~ N(1, sigma)`.
    pub fn relative_gaussian(sigma: f64) -> Self {
        Self { kind: DistributionKind::Gaussian { mean: 1.0, sigma }, relative: true }
    }

    /// Multiplicative factor fixed at 1.
    pub fn relative_point_mass() -> Self {
        Self { kind: DistributionKind::PointMass { value: 1.0 }, relative: true }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DistributionKind::Gaussian { mean, sigma } => {
                if !(sigma > 0.0 && sigma.is_finite() && mean.is_finite()) {
                    return Err(validation("gaussian sigma must be positive and finite"));
                }
            }
            DistributionKind::Uniform { lower, upper } => {
                if !(lower < upper && lower.is_finite() && upper.is_finite()) {
                    return Err(validation("uniform bounds must satisfy lower < upper"));
                }
            }
            DistributionKind::PointMass { value } => {
                if !value.is_finite() {
                    return Err(validation("point mass must be finite"));
                }
            }
        }
        Ok(())
    }

    /// `E[X^k]` of the underlying law (the factor when `relative`).
    pub fn raw_moment(&self, k: u32) -> f64 {
        raw_moment(&self.kind, k)
    }

    /// `E[theta^k]` for the parameter with the given nominal value.
    pub fn parameter_moment(&self, nominal: f64, k: u32) -> f64 {
        if self.relative {
            nominal.powi(k as i32) * self.raw_moment(k)
        } else {
            self.raw_moment(k)
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.kind, DistributionKind::PointMass { .. })
    }

    /// `phi(s) = E[exp(i s X)]` in closed form.
    pub fn characteristic(&self, s: f64) -> Complex64 {
        match self.kind {
            DistributionKind::Gaussian { mean, sigma } => {
                Complex64::new(-0.5 * sigma * sigma * s * s, mean * s).exp()
            }
            DistributionKind::Uniform { lower, upper } => {
                if s == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                let i = Complex64::i();
                ((i * s * upper).exp() - (i * s * lower).exp()) / (i * s * (upper - lower))
            }
            DistributionKind::PointMass { value } => Complex64::new(0.0, value * s).exp(),
        }
    }

    /// Draws one value of the law itself.
    pub fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistributionKind::Gaussian { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
            DistributionKind::Uniform { lower, upper } => rng.random_range(lower..upper),
            DistributionKind::PointMass { value } => value,
        }
    }

    /// Maps a standard-normal draw through a gaussian law; used by the
    /// correlated sampler. Non-gaussian laws ignore `z`.
    pub fn from_standard_normal<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> f64 {
        match self.kind {
            DistributionKind::Gaussian { mean, sigma } => mean + sigma * z,
            _ => self.sample_raw(rng),
        }
    }

    /// Converts a draw of the law into a parameter value.
    pub fn realize(&self, nominal: f64, draw: f64) -> f64 {
        if self.relative {
            nominal * draw
        } else {
            draw
        }
    }
}

/// Closed-form raw moment `E[X^k]`.
///
/// Gaussian moments use `m_k = mean m_{k-1} + (k-1) sigma^2 m_{k-2}`.
pub fn raw_moment(kind: &DistributionKind, k: u32) -> f64 {
    match *kind {
        DistributionKind::Gaussian { mean, sigma } => {
            let var = sigma * sigma;
            let (mut prev, mut cur) = (1.0, mean);
            if k == 0 {
                return 1.0;
            }
            for j in 2..=k {
                let next = mean * cur + (j - 1) as f64 * var * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
        DistributionKind::Uniform { lower, upper } => {
            if k == 0 {
                return 1.0;
            }
            let kp = k as i32 + 1;
            (upper.powi(kp) - lower.powi(kp)) / (kp as f64 * (upper - lower))
        }
        DistributionKind::PointMass { value } => value.powi(k as i32),
    }
}

/// A target paired with its law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainParameter {
    pub target: ParameterTarget,
    pub distribution: ParameterDistribution,
}

impl UncertainParameter {
    pub fn new(target: ParameterTarget, distribution: ParameterDistribution) -> Self {
        Self { target, distribution }
    }

    pub fn validate(&self, system: &QuantumSystem, field: &ControlField) -> Result<()> {
        self.target.validate(system, field.n_modes())?;
        self.distribution.validate()?;
        if self.distribution.relative && self.target.nominal(system, field) == 0.0 {
            return Err(validation(format!(
                "{} has zero nominal value; a relative law is undefined",
                self.target.label()
            )));
        }
        Ok(())
    }

    pub fn moment(&self, system: &QuantumSystem, field: &ControlField, k: u32) -> f64 {
        self.distribution
            .parameter_moment(self.target.nominal(system, field), k)
    }
}

/// Applies parameter values to a system/field pair.
pub fn apply_parameters(
    system: &QuantumSystem,
    field: &ControlField,
    targets: &[ParameterTarget],
    values: &[f64],
) -> (QuantumSystem, ControlField) {
    let mut sys = system.clone();
    let mut fld = field.clone();
    for (t, &v) in targets.iter().zip(values) {
        match *t {
            ParameterTarget::Dipole { i, j } => sys = sys.with_dipole_element(i, j, v),
            ParameterTarget::ModeAmplitude { k } => fld.modes[k].amplitude = v,
        }
    }
    (sys, fld)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_first_and_fourth() {
        let d = ParameterDistribution::gaussian(0.37, 0.2);
        assert_eq!(d.raw_moment(0), 1.0);
        assert_eq!(d.raw_moment(1), 0.37);
        assert_eq!(ParameterDistribution::gaussian(0.0, 1.0).raw_moment(4), 3.0);
    }

    #[test]
    fn gaussian_six_matches_quadrature_value() {
        // E[X^6] for N(1, 0.1), frozen from 50-digit quadrature of x^6 p(x)
        // (tests/oracles/moments.py).
        let expect = 1.154_515;
        let got = ParameterDistribution::gaussian(1.0, 0.1).raw_moment(6);
        assert!(((got - expect) / expect).abs() < 1e-10, "{got}");
    }

    #[test]
    fn uniform_moments() {
        let d = ParameterDistribution::uniform(-1.0, 3.0);
        assert_eq!(d.raw_moment(0), 1.0);
        assert!((d.raw_moment(1) - 1.0).abs() < 1e-15);
        // (81 - 1) / (4 * 4) * ... : E[X^3] = (3^4 - 1) / (4 * 4)
        assert!((d.raw_moment(3) - 80.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_variance_identity() {
        for &(m, s) in &[(1.0, 0.05), (-3.2, 0.7), (1e3, 2.0)] {
            let d = ParameterDistribution::gaussian(m, s);
            let var = d.raw_moment(2) - d.raw_moment(1).powi(2);
            assert!(((var - s * s) / (s * s)).abs() < 1e-14 * (1.0 + (m / s).powi(2)));
        }
    }

    #[test]
    fn characteristic_derivatives_give_moments() {
        // (-i)^k phi^(k)(0) by central differences for k = 1, 2
        let d = ParameterDistribution::gaussian(0.8, 0.3);
        let h = 1e-4;
        let d1 = (d.characteristic(h) - d.characteristic(-h)) / (2.0 * h);
        let m1 = (-Complex64::i() * d1).re;
        let d2 = (d.characteristic(h) - 2.0 * d.characteristic(0.0) + d.characteristic(-h)) / (h * h);
        let m2 = (-d2).re;
        assert!((m1 - d.raw_moment(1)).abs() < 1e-7);
        assert!((m2 - d.raw_moment(2)).abs() < 1e-6);
    }

    #[test]
    fn relative_parameter_moments() {
        let d = ParameterDistribution::relative_gaussian(0.05);
        let nominal = 2.0;
        assert!((d.parameter_moment(nominal, 1) - 2.0).abs() < 1e-15);
        assert!((d.parameter_moment(nominal, 2) - 4.0 * (1.0 + 0.0025)).abs() < 1e-14);
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(ParameterDistribution::gaussian(0.0, 0.0).validate().is_err());
        assert!(ParameterDistribution::uniform(1.0, 1.0).validate().is_err());
        assert!(ParameterDistribution::point_mass(2.0).validate().is_ok());
    }

    #[test]
    fn relative_law_on_zero_nominal_rejected() {
        let sys = crate::system::example_system();
        let field = ControlField::zero(2, 10.0);
        let p = UncertainParameter::new(
            ParameterTarget::dipole(0, 4),
            ParameterDistribution::relative_gaussian(0.05),
        );
        assert!(p.validate(&sys, &field).is_err());
    }
}
