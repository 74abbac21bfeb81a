//! Pathway encoding and decoding: selected parameters are tagged with phases
//! `exp(i gamma_k s)` and the coefficient of each monomial
//! `prod theta_k^alpha_k` is read off a discrete Fourier transform over `s`.

pub mod decode;
pub mod encoding;
pub mod sensitivity;

pub use decode::{
    decode_pathways, decode_pathways_with, pathways_from_spectrum, reconstruct_amplitude, sample_amplitudes, spectrum, DecodeOptions, Pathway,
    PathwayTable, DEFAULT_ALIASING_TOL, DEFAULT_RETENTION_TOL,
};
pub use encoding::{admissible_polytopes, encoded_propagate, EncodingScheme, DEFAULT_MAX_TOTAL_ORDER};
pub use sensitivity::{
    candidate_parameters, gene_hessian, hessian_rank_check, significant_parameters, HessianOptions, HessianReport,
    HessianStatus, Sensitivity, SensitivityMode, SensitivityReport, CRITICALITY_TOL,
};

use crate::uncertainty::ParameterTarget;

/// Couplings into the target level of the built-in five-level system.
pub fn default_paper5_encoding() -> Vec<ParameterTarget> {
    vec![ParameterTarget::dipole(0, 3), ParameterTarget::dipole(1, 3), ParameterTarget::dipole(3, 4)]
}
