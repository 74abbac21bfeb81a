use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::C64;
use crate::moments::interference::InterferenceBreakdown;
use crate::moments::monte_carlo::McEstimate;
use crate::moments::{joint_moment, MomentSpec};
use crate::pathways::PathwayTable;

/// `E[P]` above `1 + UNITY_FLAG_TOL` is flagged as truncation error.
pub const UNITY_FLAG_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub from: usize,
    pub to: usize,
    pub expected_amplitude: C64,
    pub variance_re: f64,
    pub variance_im: f64,
    pub expected_probability: f64,
    pub nominal_probability: f64,
    /// Monte-Carlo estimate of `var(P)`, filled in by the caller.
    pub variance_probability: Option<McEstimate>,
    pub interference: Option<InterferenceBreakdown>,
    pub n_pathways: usize,
    /// `|U(0) - sum_retained c_alpha theta^alpha|`, carried as a constant term.
    pub truncation_residual: f64,
    pub exceeds_unity: bool,
}

/// Retained pathways plus the residual as a constant term.
fn terms(table: &PathwayTable) -> Vec<(C64, Vec<u32>)> {
    let n = table.theta.len();
    let mut out: Vec<(C64, Vec<u32>)> = table.pathways.iter().map(|p| (p.coefficient, p.polytope.clone())).collect();
    let r = table.residual();
    if r != C64::default() {
        out.push((r, vec![0; n]));
    }
    out
}

/// `E[U]`, `var(Re U)`, `var(Im U)`, `E[P]` from the decoded pathways and
/// closed-form parameter moments. The probability variance is left empty.
pub fn asymptotic_moments(table: &PathwayTable, spec: &MomentSpec) -> Result<RobustnessReport> {
    spec.check_alignment(table)?;
    let terms = terms(table);
    let top = terms.iter().map(|(_, a)| a.iter().sum::<u32>()).max().unwrap_or(0);
    let m = spec.moment_table(&table.theta, 2 * top);
    let zero = vec![0u32; table.theta.len()];

    let expected_amplitude: C64 = terms.iter().map(|(c, a)| c * joint_moment(&m, a, &zero)).sum();
    // E[U^2] and E[|U|^2] over ordered pairs, folded into a < b plus diagonal
    let (mut eu2, mut ep) = (C64::default(), 0.0);
    for (b, (cb, ab)) in terms.iter().enumerate() {
        ep += cb.norm_sqr() * joint_moment(&m, ab, ab);
        eu2 += cb * cb * joint_moment(&m, ab, ab);
        for (ca, aa) in &terms[..b] {
            let w = joint_moment(&m, aa, ab);
            ep += 2.0 * (ca * cb.conj()).re * w;
            eu2 += 2.0 * ca * cb * w;
        }
    }
    let variance_re = (0.5 * (ep + eu2.re) - expected_amplitude.re.powi(2)).max(0.0);
    let variance_im = (0.5 * (ep - eu2.re) - expected_amplitude.im.powi(2)).max(0.0);
    Ok(RobustnessReport {
        from: table.from,
        to: table.to,
        expected_amplitude,
        variance_re,
        variance_im,
        expected_probability: ep,
        nominal_probability: table.amplitude.norm_sqr(),
        variance_probability: None,
        interference: None,
        n_pathways: table.pathways.len(),
        truncation_residual: table.residual().norm(),
        exceeds_unity: ep > 1.0 + UNITY_FLAG_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathways::Pathway;
    use crate::uncertainty::{ParameterDistribution, ParameterTarget, UncertainParameter};

    fn table(pathways: Vec<Pathway>, theta: Vec<f64>) -> PathwayTable {
        let amplitude = crate::pathways::reconstruct_amplitude(&pathways, &theta);
        PathwayTable {
            from: 0,
            to: 1,
            labels: vec!["mu[0,1]".into()],
            theta,
            pathways,
            amplitude,
            aliasing_ratio: 0.0,
        }
    }

    fn spec(d: ParameterDistribution) -> MomentSpec {
        MomentSpec::new(vec![UncertainParameter::new(ParameterTarget::dipole(0, 1), d)])
    }

    fn pathway(a: u32, c: C64, theta: f64) -> Pathway {
        Pathway { polytope: vec![a], coefficient: c, nominal_weight: theta.powi(a as i32).abs() }
    }

    #[test]
    fn point_mass_reproduces_nominal() {
        let t = table(vec![pathway(1, C64::new(0.3, 0.1), 2.0), pathway(3, C64::new(-0.02, 0.05), 2.0)], vec![2.0]);
        let r = asymptotic_moments(&t, &spec(ParameterDistribution::relative_point_mass())).unwrap();
        assert!((r.expected_amplitude - t.amplitude).norm() < 1e-15);
        assert!((r.expected_probability - r.nominal_probability).abs() < 1e-15);
        assert!(r.variance_re < 1e-15 && r.variance_im < 1e-15);
    }

    #[test]
    fn single_pathway_even_moments() {
        let (c, sigma, theta) = (C64::new(0.2, -0.4), 0.1, 1.5);
        let t = table(vec![pathway(2, c, theta)], vec![theta]);
        let r = asymptotic_moments(&t, &spec(ParameterDistribution::relative_gaussian(sigma))).unwrap();
        // E[xi^4] for N(1, s): 1 + 6 s^2 + 3 s^4
        let s2 = sigma * sigma;
        let want = c.norm_sqr() * theta.powi(4) * (1.0 + 6.0 * s2 + 3.0 * s2 * s2);
        assert!((r.expected_probability - want).abs() < 1e-14);
        assert!(r.expected_probability > r.nominal_probability);
    }

    #[test]
    fn linear_amplitude_variance() {
        // U = c theta, theta ~ N(m, s): var Re = (Re c)^2 s^2
        let c = C64::new(0.3, 0.4);
        let t = table(vec![pathway(1, c, 1.0)], vec![1.0]);
        let r = asymptotic_moments(&t, &spec(ParameterDistribution::gaussian(1.0, 0.2))).unwrap();
        assert!((r.variance_re - 0.09 * 0.04).abs() < 1e-15);
        assert!((r.variance_im - 0.16 * 0.04).abs() < 1e-15);
        assert!(r.expected_probability >= r.expected_amplitude.norm_sqr() - 1e-15);
    }

    #[test]
    fn misaligned_spec_rejected() {
        let t = table(vec![pathway(1, C64::new(1.0, 0.0), 1.0)], vec![1.0]);
        let s = MomentSpec::new(vec![UncertainParameter::new(
            ParameterTarget::dipole(1, 2),
            ParameterDistribution::relative_gaussian(0.1),
        )]);
        assert_eq!(asymptotic_moments(&t, &s).unwrap_err().category(), "validation");
    }
}
