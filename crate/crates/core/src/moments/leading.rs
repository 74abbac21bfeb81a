use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::ControlField;
use crate::moments::MomentSpec;
use crate::propagator::{evaluate_objective, ObjectiveSpec, TimeGrid};
use crate::system::QuantumSystem;
use crate::uncertainty::{apply_parameters, DistributionKind, ParameterDistribution};

/// Taylor estimates of `E[dJ]` and `var(J)` about the nominal parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderMoments {
    pub objective_value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    /// `sum_k g_k (E[theta_k] - theta_k)`; exactly 0 for laws centred on nominal.
    pub first_order_e_shift: f64,
    /// `1/2 sum_kl H_kl E[d_k d_l]` with independent deviations `d`.
    pub second_order_e_shift: f64,
    /// `sum_k g_k^2 var(theta_k)`.
    pub first_order_variance: f64,
}

fn fd_step(x: f64) -> f64 {
    1e-4 * x.abs().max(1e-2)
}

/// Mean offset of a law from the nominal value; gaussian laws centred on
/// nominal return exactly 0.
fn mean_offset(d: &ParameterDistribution, nominal: f64) -> f64 {
    let mean = d.parameter_moment(nominal, 1);
    match d.kind {
        DistributionKind::Gaussian { mean: m, .. } if (d.relative && m == 1.0) || (!d.relative && m == nominal) => 0.0,
        _ => mean - nominal,
    }
}

/// Leading-order moments of `f` about `nominal` under independent `laws`,
/// with central-difference derivatives.
pub fn leading_order_from_fn<F>(f: F, nominal: &[f64], laws: &[ParameterDistribution]) -> Result<LeadingOrderMoments>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = nominal.len();
    let h: Vec<f64> = nominal.iter().map(|&x| fd_step(x)).collect();
    let eval = |d: &[(usize, f64)]| {
        let mut x = nominal.to_vec();
        for &(k, v) in d {
            x[k] += v;
        }
        f(&x)
    };
    let j0 = eval(&[])?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let entries: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            if a == b {
                let (jp, jm) = (eval(&[(a, h[a])])?, eval(&[(a, -h[a])])?);
                Ok(((jp - jm) / (2.0 * h[a]), (jp - 2.0 * j0 + jm) / (h[a] * h[a])))
            } else {
                let pp = eval(&[(a, h[a]), (b, h[b])])?;
                let pm = eval(&[(a, h[a]), (b, -h[b])])?;
                let mp = eval(&[(a, -h[a]), (b, h[b])])?;
                let mm = eval(&[(a, -h[a]), (b, -h[b])])?;
                Ok((0.0, (pp - pm - mp + mm) / (4.0 * h[a] * h[b])))
            }
        })
        .collect::<Result<_>>()?;
    let mut gradient = vec![0.0; n];
    let mut hessian = vec![vec![0.0; n]; n];
    for (&(a, b), &(g, v)) in pairs.iter().zip(&entries) {
        if a == b {
            gradient[a] = g;
        }
        hessian[a][b] = v;
        hessian[b][a] = v;
    }
    let offset: Vec<f64> = laws.iter().zip(nominal).map(|(d, &x)| mean_offset(d, x)).collect();
    let var: Vec<f64> = laws
        .iter()
        .zip(nominal)
        .map(|(d, &x)| (d.parameter_moment(x, 2) - d.parameter_moment(x, 1).powi(2)).max(0.0))
        .collect();
    let first_order_e_shift = gradient.iter().zip(&offset).map(|(g, d)| g * d).sum();
    let mut second = 0.0;
    for a in 0..n {
        for b in 0..n {
            let cov = if a == b { var[a] } else { 0.0 };
            second += 0.5 * hessian[a][b] * (cov + offset[a] * offset[b]);
        }
    }
    let first_order_variance = gradient.iter().zip(&var).map(|(g, v)| g * g * v).sum();
    Ok(LeadingOrderMoments {
        objective_value: j0,
        gradient,
        hessian,
        first_order_e_shift,
        second_order_e_shift: second,
        first_order_variance,
    })
}

/// Leading-order moments of an objective under the spec's parameter laws.
pub fn leading_order_moments(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
    spec: &MomentSpec,
) -> Result<LeadingOrderMoments> {
    spec.validate(system, field)?;
    let targets = spec.targets();
    let nominal: Vec<f64> = targets.iter().map(|t| t.nominal(system, field)).collect();
    let laws: Vec<ParameterDistribution> = spec.parameters.iter().map(|p| p.distribution).collect();
    leading_order_from_fn(
        |x| {
            let (s, f) = apply_parameters(system, field, &targets, x);
            evaluate_objective(&s, &f, grid, objective)
        },
        &nominal,
        &laws,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_toy() {
        let sigma = 0.3;
        let r = leading_order_from_fn(|x| Ok(x[0] * x[0]), &[0.0], &[ParameterDistribution::gaussian(0.0, sigma)]).unwrap();
        assert_eq!(r.first_order_e_shift, 0.0);
        assert!((r.second_order_e_shift - sigma * sigma).abs() < 1e-9);
        assert!(r.first_order_variance.abs() < 1e-12);
    }

    #[test]
    fn gaussian_shift_is_exactly_zero() {
        let laws = [ParameterDistribution::relative_gaussian(0.05), ParameterDistribution::gaussian(2.0, 0.1)];
        let r = leading_order_from_fn(|x| Ok((x[0] * 3.0).sin() + x[1].powi(3)), &[0.7, 2.0], &laws).unwrap();
        assert_eq!(r.first_order_e_shift, 0.0);
        // var = g0^2 (0.05 * 0.7)^2 + g1^2 0.1^2
        let want = (3.0 * (2.1f64).cos()).powi(2) * (0.035f64).powi(2) + 144.0 * 0.01;
        assert!((r.first_order_variance - want).abs() < 1e-6 * want);
    }

    #[test]
    fn offset_uniform_shifts_mean() {
        let r = leading_order_from_fn(|x| Ok(2.0 * x[0]), &[1.0], &[ParameterDistribution::uniform(1.0, 2.0)]).unwrap();
        assert!((r.first_order_e_shift - 1.0).abs() < 1e-8);
    }
}
