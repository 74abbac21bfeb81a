//! Pathway coefficients from the discrete Fourier transform over `s`.

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::field::ControlField;
use crate::linalg::C64;
use crate::pathways::encoding::{encoded_column, EncodingScheme};
use crate::propagator::{check_durations, TimeGrid};
use crate::system::QuantumSystem;

pub const DEFAULT_RETENTION_TOL: f64 = 1e-4;
/// Non-admissible mass below the retention threshold is indistinguishable
/// from dropped pathways.
pub const DEFAULT_ALIASING_TOL: f64 = DEFAULT_RETENTION_TOL;

/// One monomial `c_alpha prod theta_k^alpha_k` of an amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pathway {
    pub polytope: Vec<u32>,
    /// Normalized coefficient `c_alpha`.
    pub coefficient: C64,
    /// `prod |theta_k|^alpha_k` at nominal values.
    pub nominal_weight: f64,
}

impl Pathway {
    pub fn order(&self) -> u32 {
        self.polytope.iter().sum()
    }

    pub fn magnitude(&self) -> f64 {
        self.coefficient.norm()
    }

    pub fn phase(&self) -> f64 {
        self.coefficient.im.atan2(self.coefficient.re)
    }

    /// `|c_alpha| prod |theta_k|^alpha_k`, the size of the term at nominal values.
    pub fn weighted_magnitude(&self) -> f64 {
        self.magnitude() * self.nominal_weight
    }

    pub fn monomial(&self, theta: &[f64]) -> f64 {
        self.polytope.iter().zip(theta).map(|(&a, &t)| t.powi(a as i32)).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeOptions {
    /// Drop bins below `retention_tol * max |bin|`.
    pub retention_tol: f64,
    /// Fail when a non-admissible bin exceeds `aliasing_tol * max |bin|`.
    pub aliasing_tol: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self { retention_tol: DEFAULT_RETENTION_TOL, aliasing_tol: DEFAULT_ALIASING_TOL }
    }
}

/// Decoded pathways of one amplitude `U_{to,from}(T)` (interaction picture).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathwayTable {
    pub from: usize,
    pub to: usize,
    pub labels: Vec<String>,
    /// Nominal values of the encoded parameters.
    pub theta: Vec<f64>,
    /// Retained pathways, descending by weighted magnitude.
    pub pathways: Vec<Pathway>,
    /// `U_{to,from}(T, s = 0)`.
    pub amplitude: C64,
    /// Largest non-admissible bin relative to the largest bin.
    pub aliasing_ratio: f64,
}

impl PathwayTable {
    /// `U(0) - sum_retained c_alpha theta^alpha`: dropped and non-admissible mass.
    pub fn residual(&self) -> C64 {
        self.amplitude - reconstruct_amplitude(&self.pathways, &self.theta)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("polytope,re,im,abs,phase,order,weighted_abs\n");
        for p in &self.pathways {
            let poly: Vec<String> = p.polytope.iter().map(|a| a.to_string()).collect();
            s.push_str(&format!(
                "[{}],{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e}\n",
                poly.join(" "),
                p.coefficient.re,
                p.coefficient.im,
                p.magnitude(),
                p.phase(),
                p.order(),
                p.weighted_magnitude()
            ));
        }
        s
    }
}

/// `U_{to,from}(T, s_q)` over the scheme's s-grid.
pub fn sample_amplitudes(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    scheme: &EncodingScheme,
    from: usize,
    to: usize,
) -> Result<Vec<C64>> {
    check_durations(field, grid)?;
    scheme.validate_for(system, field)?;
    let n = system.dimension();
    if from >= n || to >= n {
        return Err(validation(format!("transition {from}->{to} out of range for N = {n}")));
    }
    Ok(scheme
        .s_grid()
        .par_iter()
        .map(|&s| encoded_column(system, field, grid, scheme, s, from)[to])
        .collect())
}

/// Bins `(1/N_s) sum_q x_q exp(-i b s_q)`, `b = 0..N_s`.
pub fn spectrum(samples: &[C64]) -> Vec<C64> {
    let mut buf = samples.to_vec();
    let fft = FftPlanner::new().plan_fft_forward(buf.len());
    fft.process(&mut buf);
    let scale = 1.0 / samples.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

/// Assigns spectrum bins to polytopes and normalizes them.
pub fn pathways_from_spectrum(
    bins: &[C64],
    scheme: &EncodingScheme,
    theta: &[f64],
    options: &DecodeOptions,
) -> Result<(Vec<Pathway>, f64)> {
    let n_s = scheme.s_points();
    if bins.len() != n_s {
        return Err(validation("spectrum length does not match the scheme"));
    }
    let max_bin = bins.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut admissible = vec![false; n_s];
    let mut pathways = Vec::new();
    for a in scheme.polytopes() {
        let b = (scheme.frequency(a) % n_s as u64) as usize;
        admissible[b] = true;
        let v = bins[b];
        if max_bin == 0.0 || v.norm() < options.retention_tol * max_bin || v.norm() == 0.0 {
            continue;
        }
        let monomial: f64 = a.iter().zip(theta).map(|(&k, &t)| t.powi(k as i32)).product();
        pathways.push(Pathway { polytope: a.clone(), coefficient: v / monomial, nominal_weight: monomial.abs() });
    }
    let worst = bins
        .iter()
        .zip(&admissible)
        .filter(|(_, &ok)| !ok)
        .map(|(z, _)| z.norm())
        .fold(0.0, f64::max);
    let ratio = if max_bin > 0.0 { worst / max_bin } else { 0.0 };
    if ratio > options.aliasing_tol {
        return Err(Error::Decoding(format!(
            "non-admissible spectral content {ratio:.3e} of the largest bin exceeds {:.1e}; \
             increase max_total_order or s_points",
            options.aliasing_tol
        )));
    }
    pathways.sort_by(|x, y| y.weighted_magnitude().total_cmp(&x.weighted_magnitude()));
    Ok((pathways, ratio))
}

/// Decodes the pathways of `U_{to,from}(T)` with default aliasing tolerance.
pub fn decode_pathways(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    scheme: &EncodingScheme,
    from: usize,
    to: usize,
    retention_tol: f64,
) -> Result<PathwayTable> {
    decode_pathways_with(system, field, grid, scheme, from, to, &DecodeOptions { retention_tol, ..Default::default() })
}

pub fn decode_pathways_with(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    scheme: &EncodingScheme,
    from: usize,
    to: usize,
    options: &DecodeOptions,
) -> Result<PathwayTable> {
    if !(options.retention_tol >= 0.0 && options.aliasing_tol >= 0.0) {
        return Err(validation("decode tolerances must be non-negative"));
    }
    let samples = sample_amplitudes(system, field, grid, scheme, from, to)?;
    let bins = spectrum(&samples);
    let theta = scheme.nominal_values(system, field);
    let (pathways, aliasing_ratio) = pathways_from_spectrum(&bins, scheme, &theta, options)?;
    Ok(PathwayTable {
        from,
        to,
        labels: scheme.encoded().iter().map(|t| t.label()).collect(),
        theta,
        pathways,
        amplitude: samples[0],
        aliasing_ratio,
    })
}

/// `sum_alpha c_alpha prod theta_k^alpha_k`.
pub fn reconstruct_amplitude(pathways: &[Pathway], theta: &[f64]) -> C64 {
    pathways.iter().map(|p| p.coefficient * p.monomial(theta)).sum()
}
