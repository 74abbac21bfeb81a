use qpr::moments::{calibrate_samples, McOptions, McSampler, MomentSpec};
use qpr::pathways::default_paper5_encoding;
use qpr::propagator::TimeGrid;
use qpr::{example_system, Chromosome, ParameterDistribution, UncertainParameter};

const X1: [f64; 14] = [
    1.7384, 1.0448, 1.3715, 1.3669, 1.5256, 0.7038, 3.2220, 2.4826, 1.9833, 0.2558, 6.1403, 5.5389, 1.6142, 4.9542,
];

#[test]
fn calibrated_sample_counts_meet_the_halfwidth() {
    let spec = MomentSpec::new(
        default_paper5_encoding()
            .into_iter()
            .map(|t| UncertainParameter::new(t, ParameterDistribution::relative_gaussian(0.05)))
            .collect(),
    );
    let field = Chromosome::from_genes(&X1, 0.15).unwrap().to_field(40.0);
    let sampler = McSampler::new(&example_system(), &field, &TimeGrid::new(160, 40.0).unwrap(), 0, 3, &spec, &McOptions::default()).unwrap();
    // reference mean; its standard error is far below the halfwidth
    let truth = sampler.estimate(200_000, 1).unwrap();
    let halfwidth = 0.005;
    assert!(truth.se_mean < 0.02 * halfwidth);
    let pilot = sampler.estimate(256, 2).unwrap();
    let n = calibrate_samples(halfwidth, pilot.variance, 0.95).unwrap();
    let hits = (0..100u64)
        .filter(|&trial| (sampler.estimate(n, 1_000 + trial).unwrap().mean - truth.mean).abs() <= halfwidth)
        .count();
    assert!(hits >= 90, "{hits}/100 within {halfwidth} at n = {n}");
}
