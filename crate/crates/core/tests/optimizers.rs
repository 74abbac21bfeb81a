//! Optimizer comparisons on the five-level ladder, transition 0 -> 3.

use qpr::moments::MomentSpec;
use qpr::optimizers::{
    acromuse_optimize, derive_seed, nsga2_optimize, per_instance_table, seed_from_front, tga_optimize, AcromuseConfig, Fitness, GAConfig, MomentFitness,
    NoisyAmplitudeFitness, NominalFitness, ParetoFront,
};
use qpr::pathways::default_paper5_encoding;
use qpr::propagator::TimeGrid;
use qpr::{example_system, FieldBounds, ParameterDistribution, UncertainParameter};

fn nominal() -> NominalFitness {
    let grid = TimeGrid::new(250, 40.0).unwrap();
    NominalFitness::new(&example_system(), 0.15, 40.0, grid, 0, 3, &FieldBounds::default(), 7).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

#[test]
fn noiseless_acromuse_matches_tga() {
    let clean = NoisyAmplitudeFitness::new(nominal(), 0.0).unwrap();
    let ga = GAConfig { seed: 0, ..Default::default() };
    let tga = tga_optimize(&clean, &ga, None).unwrap();
    let acro = acromuse_optimize(&clean, &AcromuseConfig { ga, ..Default::default() }, None).unwrap();
    let best = clean.nominal.probability(&acro.best().genes).unwrap();
    assert!((best - tga.best.fitness).abs() <= 0.02, "ACROMUSE {best} vs tGA {}", tga.best.fitness);
}

/// First generation whose population mean reaches `level`, or the run length.
fn generations_to(records: &[qpr::optimizers::GenerationRecord], level: f64) -> f64 {
    records.iter().position(|r| r.mean >= level).unwrap_or(records.len()) as f64
}

#[test]
fn front_seeded_acromuse_converges_in_half_the_generations() {
    let spec = MomentSpec::new(
        default_paper5_encoding()
            .into_iter()
            .map(|t| UncertainParameter::new(t, ParameterDistribution::relative_gaussian(0.05)))
            .collect(),
    );
    let mf = MomentFitness::new(nominal(), spec, 0.05, 0.95).unwrap();
    let run = nsga2_optimize(&mf, &GAConfig { population_size: 40, generations: 40, seed: 2, ..Default::default() }, None).unwrap();
    let front = ParetoFront::from_nsga2(&mf, &run).unwrap();

    let noisy = NoisyAmplitudeFitness::new(nominal(), 0.1).unwrap();
    let (mut seeded, mut random) = (vec![], vec![]);
    for seed in 0..5u64 {
        let cfg = AcromuseConfig { ga: GAConfig { population_size: 40, generations: 80, seed, ..Default::default() }, ..Default::default() };
        let init = seed_from_front(&front.genomes(), noisy.space(), 40, seed).unwrap();
        let r = acromuse_optimize(&noisy, &cfg, None).unwrap().trace.records;
        let s = acromuse_optimize(&noisy, &cfg, Some(&init)).unwrap().trace.records;
        // 95% of the unseeded run's final population mean
        let level = 0.95 * r.last().unwrap().mean;
        random.push(generations_to(&r, level));
        seeded.push(generations_to(&s, level));
    }
    let (gs, gr) = (median(seeded.clone()), median(random.clone()));
    assert!(gs <= 0.5 * gr, "seeded {seeded:?} vs random {random:?}");
}

#[test]
#[ignore = "not reproduced: one retained solution wins two or more instances in every run"]
fn each_retained_solution_wins_an_instance_in_some_run() {
    let noisy = NoisyAmplitudeFitness::new(nominal(), 0.1).unwrap();
    let mut covered = vec![];
    for seed in 0..5u64 {
        let cfg = AcromuseConfig { ga: GAConfig { seed, ..Default::default() }, ..Default::default() };
        let mut pop = acromuse_optimize(&noisy, &cfg, None).unwrap().population;
        pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
        let retained: Vec<Vec<f64>> = pop.iter().take(4).map(|i| i.genes.clone()).collect();
        let instances: Vec<u64> = (0..4).map(|c| derive_seed(seed, 1_000, c)).collect();
        let table = per_instance_table(&noisy, &retained, &instances).unwrap();
        let mut wins = [false; 4];
        for c in 0..4 {
            let r = (0..4).max_by(|&a, &b| table[a][c].total_cmp(&table[b][c])).unwrap();
            wins[r] = true;
        }
        covered.push(wins.iter().all(|&w| w));
    }
    assert!(covered.iter().any(|&c| c), "no run had a winner per solution: {covered:?}");
}
