//! Subcommand bodies. Each returns the artifacts it wants written, as
//! `(file name, contents)` pairs relative to the output directory.

use std::path::Path;

use qpr::moments::{asymptotic_moments, interference_breakdown, leading_order_moments, mc_estimate};
use qpr::optimizers::{
    acromuse_optimize, compare_instances, derive_seed, nsga2_optimize, seed_from_front, tga_optimize, Fitness, InstanceTables,
    MomentFitness, NoisyAmplitudeFitness, NominalFitness, ParetoFront,
};
use qpr::pathways::{candidate_parameters, decode_pathways, hessian_rank_check, significant_parameters};
use qpr::pmp::{expected_gradient, nominal_gradient, pmp_residual};
use qpr::propagator::{dyson_terms, landscape_scan, objective_value, order_interference, propagate};
use qpr::{Error, Result};
use serde_json::json;

use crate::config::ExperimentConfig;

pub type Artifacts = Vec<(String, String)>;

fn pretty(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn nominal(cfg: &ExperimentConfig) -> Result<NominalFitness> {
    NominalFitness::new(
        &cfg.system()?,
        cfg.field.amplitude,
        cfg.field.duration,
        cfg.grid()?,
        cfg.from,
        cfg.to,
        &cfg.field.bounds,
        cfg.field.n_modes,
    )
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (sys, field, grid) = (cfg.system()?, cfg.field()?, cfg.grid()?);
    let result = propagate(&sys, &field, &grid)?;
    let value = objective_value(&result, &cfg.objective())?;
    let mut out = vec![];
    let mut report = json!({
        "objective": cfg.objective(),
        "objective_value": value,
        "probability": result.final_unitary[(cfg.to, cfg.from)].norm_sqr(),
        "unitarity_residual": result.unitarity_residual,
        "n_steps": grid.n_steps,
    });
    if let Some(m) = cfg.simulate.dyson_order {
        let d = dyson_terms(&sys, &field, &grid, m)?;
        let table = order_interference(&d, cfg.from, cfg.to);
        report["dyson"] = json!({
            "order": d.truncation_order,
            "tail_norm": d.tail_norm,
            "identity_residual": table.identity_residual(),
            "direct_sum": table.direct_sum,
            "cross_sum": table.cross_sum,
        });
        let mut terms = String::from("m,re,im,abs2\n");
        for (m, z) in d.element(cfg.from, cfg.to).iter().enumerate() {
            terms.push_str(&format!("{m},{:.17e},{:.17e},{:.17e}\n", z.re, z.im, z.norm_sqr()));
        }
        out.push(("dyson.csv".into(), terms));
        out.push(("interference.csv".into(), table.to_csv()));
    }
    out.insert(0, ("report.json".into(), pretty(&report)?));
    Ok(out)
}

pub fn landscape(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let scan = landscape_scan(
        &cfg.system()?,
        &cfg.chromosome()?,
        cfg.field.duration,
        &cfg.grid()?,
        &cfg.objective(),
        cfg.landscape.axis1,
        cfg.landscape.axis2,
    )?;
    Ok(vec![("landscape.csv".into(), scan.to_csv())])
}

pub fn pathways(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (sys, field, grid) = (cfg.system()?, cfg.field()?, cfg.grid()?);
    let table = decode_pathways(&sys, &field, &grid, &cfg.scheme()?, cfg.from, cfg.to, cfg.encoding.retention_tol)?;
    let candidates = candidate_parameters(&sys, &field);
    let sens = significant_parameters(&sys, &field, &grid, &cfg.objective(), &candidates, cfg.moments.sensitivity_threshold)?;
    let report = json!({
        "amplitude": [table.amplitude.re, table.amplitude.im],
        "aliasing_ratio": table.aliasing_ratio,
        "n_pathways": table.pathways.len(),
        "residual": table.residual().norm(),
        "sensitivity": sens,
    });
    Ok(vec![("pathways.csv".into(), table.to_csv()), ("pathways.json".into(), pretty(&report)?)])
}

pub fn moments(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (sys, field, grid, spec) = (cfg.system()?, cfg.field()?, cfg.grid()?, cfg.spec());
    let table = decode_pathways(&sys, &field, &grid, &cfg.scheme()?, cfg.from, cfg.to, cfg.encoding.retention_tol)?;
    let mut report = asymptotic_moments(&table, &spec)?;
    let breakdown = interference_breakdown(&table, &spec, cfg.moments.polar_bins)?;
    let mc = mc_estimate(&sys, &field, &grid, cfg.from, cfg.to, &spec, cfg.moments.mc_samples, derive_seed(cfg.seed, 0, 0))?;
    let leading = leading_order_moments(&sys, &field, &grid, &cfg.objective(), &spec)?;
    report.variance_probability = Some(mc);
    let out = json!({
        "asymptotic": report,
        "monte_carlo": mc,
        "asymptotic_minus_mc_in_se": (report.expected_probability - mc.mean) / mc.se_mean.max(f64::MIN_POSITIVE),
        "leading_order": leading,
        "leading_minus_asymptotic_expected": leading.objective_value + leading.second_order_e_shift - report.expected_probability,
        "interference_total_nominal": breakdown.total_nominal(),
        "interference_total_expected": breakdown.total_expected(),
    });
    Ok(vec![("moments.json".into(), pretty(&out)?), ("interference.csv".into(), breakdown.to_csv())])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Optimizer {
    Tga,
    Acromuse,
    Nsga2,
}

fn initial(cfg: &ExperimentConfig, front: Option<&Path>, space: &qpr::optimizers::GeneSpace, size: usize) -> Result<Option<Vec<Vec<f64>>>> {
    let Some(path) = front else { return Ok(None) };
    let front = ParetoFront::from_json(&std::fs::read_to_string(path)?)?;
    Ok(Some(seed_from_front(&front.genomes(), space, size, cfg.seed)?))
}

pub fn optimize(cfg: &ExperimentConfig, which: Optimizer, front: Option<&Path>) -> Result<Artifacts> {
    let nf = nominal(cfg)?;
    match which {
        Optimizer::Tga => {
            let init = initial(cfg, front, nf.space(), cfg.tga.population_size)?;
            let r = tga_optimize(&nf, &cfg.tga, init.as_deref())?;
            let report = json!({ "best": r.best, "generations_run": r.generations_run });
            Ok(vec![("result.json".into(), pretty(&report)?), ("trace.csv".into(), r.trace.to_csv())])
        }
        Optimizer::Acromuse => {
            let noisy = NoisyAmplitudeFitness::new(nf, cfg.uncertainty.amplitude_noise)?;
            let init = initial(cfg, front, noisy.space(), cfg.acromuse.ga.population_size)?;
            let r = acromuse_optimize(&noisy, &cfg.acromuse, init.as_deref())?;
            let best = r.best();
            let report = json!({
                "best": best,
                "best_nominal": noisy.nominal.probability(&best.genes)?,
                "final_spd": r.trace.last().map(|x| x.spd),
            });
            Ok(vec![("result.json".into(), pretty(&report)?), ("trace.csv".into(), r.trace.to_csv())])
        }
        Optimizer::Nsga2 => {
            let mf = MomentFitness::new(nf, cfg.spec(), cfg.nsga2.halfwidth, cfg.nsga2.confidence)?;
            let init = initial(cfg, front, qpr::optimizers::MultiFitness::space(&mf), cfg.nsga2.ga.population_size)?;
            let run = nsga2_optimize(&mf, &cfg.nsga2.ga, init.as_deref())?;
            let front = ParetoFront::from_nsga2(&mf, &run)?;
            Ok(vec![("front.json".into(), front.to_json()?), ("front.csv".into(), front.to_csv())])
        }
    }
}

pub fn verify_pmp(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (sys, field, grid, obj) = (cfg.system()?, cfg.field()?, cfg.grid()?, cfg.objective());
    let nom = nominal_gradient(&sys, &field, &grid, &obj)?;
    let exp = expected_gradient(&sys, &field, &grid, &cfg.scheme()?, &cfg.spec(), &obj)?;
    let hessian = if cfg.field.mode_amplitudes.is_none() {
        Some(hessian_rank_check(&sys, &cfg.chromosome()?, cfg.field.duration, &grid, &obj, &cfg.hessian)?)
    } else {
        None
    };
    let report = json!({
        "nominal_residual": pmp_residual(&nom),
        "expected_residual": pmp_residual(&exp),
        "hessian": hessian,
    });
    Ok(vec![
        ("pmp.json".into(), pretty(&report)?),
        ("nominal_gradient.csv".into(), nom.to_csv()),
        ("expected_gradient.csv".into(), exp.to_csv()),
    ])
}

/// Maximum error accepted as a reproduction of the reference matrix.
pub const TABLE_TOLERANCE: f64 = 0.05;

pub fn repro_table3(cfg: &ExperimentConfig, tables: Option<&Path>) -> Result<Artifacts> {
    let t = match tables {
        Some(dir) => InstanceTables::load(dir)?,
        None => InstanceTables::bundled(),
    };
    if t.amplitudes[0].len() != cfg.field.n_modes {
        return Err(Error::Config("amplitude sets and field.n_modes disagree".into()));
    }
    let report = compare_instances(&nominal(cfg)?, &t, TABLE_TOLERANCE)?;
    let best = report.best();
    let summary = json!({
        "computed": report.computed,
        "reference": report.reference,
        "mappings": report.mappings,
        "best_mapping": best.mapping,
        "best_max_abs_error": best.max_abs_error,
        "values_match": report.values_match(),
        "winners_reproduced": report.winners_reproduced(),
        "tolerance": report.tolerance,
    });
    let mut matrix = String::from("solution,i1,i2,i3,i4\n");
    for (s, row) in report.computed.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        matrix.push_str(&format!("x{},{}\n", s + 1, cells.join(",")));
    }
    Ok(vec![("table3.json".into(), pretty(&summary)?), ("table3.csv".into(), matrix), ("table3_diff.csv".into(), report.to_csv())])
}
