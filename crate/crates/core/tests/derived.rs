//! Checks against independent oracles: analytic formulas, an adaptive-step
//! integrator (tests/oracles/adaptive.py), re-propagation at perturbed
//! parameters and finite differences.

use qpr::moments::{mc_estimate, MomentSpec};
use qpr::pathways::{decode_pathways, default_paper5_encoding, encoded_propagate, reconstruct_amplitude, EncodingScheme};
use qpr::pmp::{expected_gradient, nominal_gradient};
use qpr::propagator::{dyson_terms, landscape_scan, propagate, transition_probability, ObjectiveSpec, ScanAxis, TimeGrid};
use qpr::{example_system, Chromosome, ControlField, Mode, ParameterDistribution, ParameterTarget, QuantumSystem, UncertainParameter};

const X1: [f64; 14] = [
    1.7384, 1.0448, 1.3715, 1.3669, 1.5256, 0.7038, 3.2220, 2.4826, 1.9833, 0.2558, 6.1403, 5.5389, 1.6142, 4.9542,
];

fn x1_field(amplitude: f64) -> ControlField {
    Chromosome::from_genes(&X1, amplitude).unwrap().to_field(40.0)
}

fn two_level() -> QuantumSystem {
    QuantumSystem::new(vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}

fn single_mode(amplitude: f64, frequency: f64, phase: f64, duration: f64) -> ControlField {
    ControlField::new(vec![Mode { amplitude, frequency, phase }], duration).unwrap()
}

#[test]
fn weak_resonant_drive_follows_rabi_formula() {
    // mu A T / 2 = pi / 4: half transfer, where the formula is most sensitive
    let (a, t) = (0.01, 50.0 * std::f64::consts::PI);
    let field = single_mode(a, 1.0, 0.0, t);
    let p = transition_probability(&two_level(), &field, &TimeGrid::new(4000, t).unwrap(), 0, 1).unwrap();
    let rabi = (a * t / 2.0).sin().powi(2);
    assert!(((p - rabi) / rabi).abs() <= 0.02, "P = {p}, Rabi = {rabi}");
}

#[test]
fn agrees_with_adaptive_integrator() {
    // DOP853, rtol 1e-13, atol 1e-14
    const ORACLE: f64 = 0.360350401367897;
    let p = transition_probability(&example_system(), &x1_field(0.15), &TimeGrid::new(500, 40.0).unwrap(), 0, 3).unwrap();
    assert!((p - ORACLE).abs() <= 1e-8, "P = {p}, oracle = {ORACLE}");
}

#[test]
fn landscape_is_multimodal() {
    let axis = |gene| ScanAxis { gene, min: 0.05, max: 4.0, n: 50 };
    let template = Chromosome::from_genes(&X1, 0.15).unwrap();
    let grid = TimeGrid::new(250, 40.0).unwrap();
    let scan = landscape_scan(&example_system(), &template, 40.0, &grid, &ObjectiveSpec::transition(0, 3), axis(0), axis(1)).unwrap();
    assert!(scan.local_maxima().len() >= 2, "{} maxima", scan.local_maxima().len());
}

#[test]
fn odd_gammas_at_s_pi_flip_odd_orders() {
    let sys = example_system();
    let field = x1_field(0.02);
    let grid = TimeGrid::new(500, 40.0).unwrap();
    let targets = (0..7).map(|k| ParameterTarget::ModeAmplitude { k }).collect();
    // gammas are powers of 11, so every gamma * pi is an odd multiple of pi
    let scheme = EncodingScheme::new(targets, 10).unwrap();
    assert!(scheme.gammas().iter().all(|g| g % 2 == 1));
    let u = encoded_propagate(&sys, &field, &grid, &scheme, std::f64::consts::PI).unwrap();
    let terms = dyson_terms(&sys, &field, &grid, 20).unwrap().element(0, 3);
    let alternating: qpr::linalg::C64 = terms.iter().enumerate().map(|(m, z)| if m % 2 == 0 { *z } else { -*z }).sum();
    assert!((u[(3, 0)] - alternating).norm() <= 1e-8, "{} vs {alternating}", u[(3, 0)]);
    assert!((terms[1]).norm() > 1e-3);
}

#[test]
fn scaled_parameters_match_repropagation() {
    let sys = example_system();
    let field = x1_field(0.02);
    let grid = TimeGrid::new(500, 40.0).unwrap();
    let scheme = EncodingScheme::new(default_paper5_encoding(), 12).unwrap();
    let table = decode_pathways(&sys, &field, &grid, &scheme, 0, 3, 1e-8).unwrap();
    let scaled: Vec<f64> = table.theta.iter().map(|t| 1.1 * t).collect();
    let predicted = reconstruct_amplitude(&table.pathways, &scaled);
    let mut perturbed = sys.clone();
    for (i, j) in [(0, 3), (1, 3), (3, 4)] {
        perturbed = perturbed.with_dipole_element(i, j, 1.1 * sys.dipole()[(i, j)]);
    }
    let exact = propagate(&perturbed, &field, &grid).unwrap().interaction_final[(3, 0)];
    // unretained mass starts at order 13, which the scaling grows by 1.1^13 or more
    let budget = 2.0 * 1.1f64.powi(13) * table.residual().norm();
    assert!((predicted - exact).norm() <= budget, "{predicted} vs {exact}, budget {budget:.2e}");
}

#[test]
fn single_parameter_variance_matches_delta_method() {
    let sys = example_system();
    let field = x1_field(0.15);
    let grid = TimeGrid::new(250, 40.0).unwrap();
    let sigma = 0.005;
    let spec = MomentSpec::new(vec![UncertainParameter::new(
        ParameterTarget::dipole(0, 3),
        ParameterDistribution::relative_gaussian(sigma),
    )]);
    let mc = mc_estimate(&sys, &field, &grid, 0, 3, &spec, 20_000, 3).unwrap();
    let mu = sys.dipole()[(0, 3)];
    let h = 1e-5;
    let p = |v: f64| transition_probability(&sys.with_dipole_element(0, 3, v), &field, &grid, 0, 3).unwrap();
    let slope = (p(mu + h) - p(mu - h)) / (2.0 * h);
    let delta = (slope * mu * sigma).powi(2);
    assert!(delta > 1e-8);
    assert!(((mc.variance - delta) / delta).abs() <= 0.2, "MC {} vs delta {delta}", mc.variance);
}

#[test]
fn one_term_expected_gradient_is_rescaled_nominal() {
    // weak two-level drive: P = |c theta|^2 to leading order, so E[theta^2] / theta^2 = 1 + sigma^2
    let sys = two_level();
    let field = single_mode(1e-3, 0.8, 0.4, 20.0);
    let grid = TimeGrid::new(400, 20.0).unwrap();
    let sigma = 0.1;
    let target = ParameterTarget::dipole(0, 1);
    let spec = MomentSpec::new(vec![UncertainParameter::new(target, ParameterDistribution::relative_gaussian(sigma))]);
    let scheme = EncodingScheme::new(vec![target], 6).unwrap();
    let obj = ObjectiveSpec::transition(0, 1);
    let nom = nominal_gradient(&sys, &field, &grid, &obj).unwrap();
    let exp = expected_gradient(&sys, &field, &grid, &scheme, &spec, &obj).unwrap();
    let ratio = 1.0 + sigma * sigma;
    let worst = nom.values.iter().zip(&exp.values).map(|(n, e)| (e - ratio * n).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-4 * nom.sup_norm, "deviation {worst} against sup {}", nom.sup_norm);
}
