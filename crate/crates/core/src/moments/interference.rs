use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::moments::{joint_moment, MomentSpec};
use crate::pathways::PathwayTable;

pub const DEFAULT_POLAR_BINS: usize = 12;

/// Cross term between pathways `a < b` (indices into the table).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceTerm {
    pub a: usize,
    pub b: usize,
    /// `phi_b - phi_a` wrapped to `[-pi, pi)`.
    pub phase_difference: f64,
    pub nominal: f64,
    pub expected: f64,
}

/// Angle bin `[lower, upper)` of the phase difference.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InterferenceBin {
    pub lower: f64,
    pub upper: f64,
    pub constructive_nominal: f64,
    pub destructive_nominal: f64,
    pub constructive_expected: f64,
    pub destructive_expected: f64,
}

impl InterferenceBin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Sum of `|term|` at nominal weighting.
    pub fn nominal_magnitude(&self) -> f64 {
        self.constructive_nominal - self.destructive_nominal
    }

    pub fn expected_magnitude(&self) -> f64 {
        self.constructive_expected - self.destructive_expected
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterferenceBreakdown {
    /// `sum_alpha |c_alpha|^2 theta^(2 alpha)`.
    pub direct_nominal: f64,
    /// `sum_alpha |c_alpha|^2 E[theta^(2 alpha)]`.
    pub direct_expected: f64,
    pub bins: Vec<InterferenceBin>,
    #[serde(skip)]
    pub terms: Vec<InterferenceTerm>,
}

impl InterferenceBreakdown {
    pub fn constructive_nominal(&self) -> f64 {
        self.bins.iter().map(|b| b.constructive_nominal).sum()
    }

    pub fn destructive_nominal(&self) -> f64 {
        self.bins.iter().map(|b| b.destructive_nominal).sum()
    }

    pub fn constructive_expected(&self) -> f64 {
        self.bins.iter().map(|b| b.constructive_expected).sum()
    }

    pub fn destructive_expected(&self) -> f64 {
        self.bins.iter().map(|b| b.destructive_expected).sum()
    }

    /// Net pairwise interference at nominal weighting.
    pub fn total_nominal(&self) -> f64 {
        self.constructive_nominal() + self.destructive_nominal()
    }

    pub fn total_expected(&self) -> f64 {
        self.constructive_expected() + self.destructive_expected()
    }

    /// `|sum_retained c_alpha theta^alpha|^2` rebuilt from direct and cross terms.
    pub fn reconstructed_nominal_probability(&self) -> f64 {
        self.direct_nominal + self.total_nominal()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_center,nominal_magnitude,expected_magnitude,constructive_flag\n");
        for b in &self.bins {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{}\n",
                b.center(),
                b.nominal_magnitude(),
                b.expected_magnitude(),
                b.center().cos() > 0.0
            ));
        }
        s
    }
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Pairwise interference of the retained pathways, nominal and under the
/// spec's moments, binned by phase difference over `[-pi, pi)`.
pub fn interference_breakdown(table: &PathwayTable, spec: &MomentSpec, n_bins: usize) -> Result<InterferenceBreakdown> {
    if n_bins < 2 {
        return Err(validation("interference histogram needs at least 2 bins"));
    }
    spec.check_alignment(table)?;
    let ps = &table.pathways;
    let top = ps.iter().map(|p| p.order()).max().unwrap_or(0);
    let m = spec.moment_table(&table.theta, 2 * top);
    let width = 2.0 * PI / n_bins as f64;
    let mut bins: Vec<InterferenceBin> = (0..n_bins)
        .map(|q| InterferenceBin { lower: -PI + q as f64 * width, upper: -PI + (q + 1) as f64 * width, ..Default::default() })
        .collect();
    let mut out = InterferenceBreakdown { direct_nominal: 0.0, direct_expected: 0.0, bins: Vec::new(), terms: Vec::new() };
    for (b, pb) in ps.iter().enumerate() {
        let ab = pb.magnitude();
        out.direct_nominal += (ab * pb.nominal_weight).powi(2);
        out.direct_expected += ab * ab * joint_moment(&m, &pb.polytope, &pb.polytope);
        for (a, pa) in ps[..b].iter().enumerate() {
            let dphi = wrap(pb.phase() - pa.phase());
            let amp = 2.0 * pa.magnitude() * ab * dphi.cos();
            let nominal = amp * pa.monomial(&table.theta) * pb.monomial(&table.theta);
            let expected = amp * joint_moment(&m, &pa.polytope, &pb.polytope);
            let q = (((dphi + PI) / width) as usize).min(n_bins - 1);
            let bin = &mut bins[q];
            for (v, c, d) in [
                (nominal, &mut bin.constructive_nominal, &mut bin.destructive_nominal),
                (expected, &mut bin.constructive_expected, &mut bin.destructive_expected),
            ] {
                if v > 0.0 {
                    *c += v;
                } else {
                    *d += v;
                }
            }
            out.terms.push(InterferenceTerm { a, b, phase_difference: dphi, nominal, expected });
        }
    }
    out.bins = bins;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::pathways::Pathway;
    use crate::uncertainty::{ParameterDistribution, ParameterTarget, UncertainParameter};

    fn table(cs: &[(u32, C64)]) -> PathwayTable {
        let theta = vec![1.0];
        let pathways: Vec<Pathway> =
            cs.iter().map(|&(a, c)| Pathway { polytope: vec![a], coefficient: c, nominal_weight: 1.0 }).collect();
        PathwayTable {
            from: 0,
            to: 1,
            labels: vec!["mu[0,1]".into()],
            amplitude: crate::pathways::reconstruct_amplitude(&pathways, &theta),
            theta,
            pathways,
            aliasing_ratio: 0.0,
        }
    }

    fn spec() -> MomentSpec {
        MomentSpec::new(vec![UncertainParameter::new(
            ParameterTarget::dipole(0, 1),
            ParameterDistribution::relative_gaussian(0.1),
        )])
    }

    #[test]
    fn aligned_phases_are_constructive() {
        let t = table(&[(1, C64::new(0.3, 0.0)), (3, C64::new(0.2, 0.0))]);
        let r = interference_breakdown(&t, &spec(), 12).unwrap();
        assert!((r.total_nominal() - 0.12).abs() < 1e-15);
        let hit: Vec<_> = r.bins.iter().filter(|b| b.nominal_magnitude() > 0.0).collect();
        assert_eq!(hit.len(), 1);
        assert!(hit[0].lower <= 0.0 && 0.0 < hit[0].upper);
    }

    #[test]
    fn antiphase_is_destructive() {
        let t = table(&[(1, C64::new(0.3, 0.0)), (3, C64::new(-0.2, 0.0))]);
        let r = interference_breakdown(&t, &spec(), 12).unwrap();
        // E[xi^4] for N(1, 0.1)
        let m4 = 1.0 + 6.0 * 0.01 + 3.0 * 1e-4;
        assert!((r.destructive_expected() + 0.12 * m4).abs() < 1e-15);
        assert_eq!(r.constructive_nominal(), 0.0);
    }

    #[test]
    fn identity_and_bin_totals() {
        let t = table(&[(0, C64::new(0.1, 0.2)), (1, C64::new(-0.3, 0.05)), (2, C64::new(0.02, -0.4))]);
        let r = interference_breakdown(&t, &spec(), 12).unwrap();
        assert!((r.reconstructed_nominal_probability() - t.amplitude.norm_sqr()).abs() < 1e-15);
        let unbinned: f64 = r.terms.iter().map(|x| x.nominal).sum();
        assert!((unbinned - r.total_nominal()).abs() < 1e-15);
        for b in &r.bins {
            assert!(b.expected_magnitude() >= b.nominal_magnitude());
        }
    }
}
