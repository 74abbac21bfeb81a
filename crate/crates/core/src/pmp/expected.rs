use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{validation, Result};
use crate::field::ControlField;
use crate::linalg::C64;
use crate::moments::MomentSpec;
use crate::pathways::{pathways_from_spectrum, spectrum, DecodeOptions, EncodingScheme};
use crate::pmp::{objective_tag, GradientTrace};
use crate::propagator::split::STAGES;
use crate::propagator::{check_durations, ObjectiveSpec, TimeGrid};
use crate::system::QuantumSystem;

/// `dE[P]/d eps(t_q)` for a transition probability.
///
/// The amplitude and its bin derivatives are sampled over the scheme's
/// s-grid, projected onto the encoding frequencies by DFT, and every pathway
/// pair is reweighted by `E[theta^(a + b)] / theta^(a + b)`. Non-admissible
/// spectral mass is carried as a constant term at nominal weight.
pub fn expected_gradient(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    scheme: &EncodingScheme,
    spec: &MomentSpec,
    objective: &ObjectiveSpec,
) -> Result<GradientTrace> {
    let ObjectiveSpec::TransitionProbability { from, to } = *objective else {
        return Err(validation("expected gradients are available for transition probabilities only"));
    };
    objective.validate(system.dimension())?;
    check_durations(field, grid)?;
    scheme.validate_for(system, field)?;
    spec.validate(system, field)?;
    if spec.targets() != scheme.encoded() {
        return Err(validation("moment spec parameters do not match the encoded parameters"));
    }
    let n = system.dimension();
    let bins = grid.n_steps;
    let per_s: Vec<(C64, Vec<C64>)> = scheme
        .s_grid()
        .par_iter()
        .map(|&s| {
            let (op, samples) = scheme.encoded_dynamics(system, field, grid, s);
            let mut psi = vec![C64::default(); n];
            psi[from] = C64::new(1.0, 0.0);
            let rec = op.evolve_recording_kicks(&samples, &mut psi);
            let mut lam = vec![C64::default(); n];
            lam[to] = C64::new(1.0, 0.0);
            let sens = op.backward_sensitivities(&samples, &rec, &mut lam);
            // costate e_to gives d U_{to,from} / d eps per kick
            let d: Vec<C64> = sens.chunks_exact(STAGES).map(|c| c.iter().sum()).collect();
            (psi[to], d)
        })
        .collect();

    let amp_bins = spectrum(&per_s.iter().map(|(a, _)| *a).collect::<Vec<_>>());
    let theta = scheme.nominal_values(system, field);
    pathways_from_spectrum(&amp_bins, scheme, &theta, &DecodeOptions { retention_tol: 0.0, ..Default::default() })?;

    // derivative spectra, bin-major
    let n_s = scheme.s_points();
    let fft = FftPlanner::new().plan_fft_forward(n_s);
    let scale = 1.0 / n_s as f64;
    let d_bins: Vec<Vec<C64>> = (0..bins)
        .into_par_iter()
        .map(|q| {
            let mut buf: Vec<C64> = per_s.iter().map(|(_, d)| d[q]).collect();
            fft.process(&mut buf);
            buf.iter_mut().for_each(|z| *z *= scale);
            buf
        })
        .collect();

    let polys = scheme.polytopes();
    let top = scheme.max_total_order();
    let m = spec.moment_table(&theta, 2 * top);
    let mono = |a: &[u32]| -> f64 { a.iter().zip(&theta).map(|(&k, &t)| t.powi(k as i32)).product() };
    let ratio = |a: &[u32], b: &[u32]| crate::moments::joint_moment(&m, a, b) / (mono(a) * mono(b));
    let idx: Vec<usize> = polys.iter().map(|a| (scheme.frequency(a) % n_s as u64) as usize).collect();
    let zero = vec![0u32; theta.len()];
    // terms: admissible bins, then the residual at polytope zero and unit monomial
    let mut amps: Vec<C64> = idx.iter().map(|&b| amp_bins[b]).collect();
    amps.push(per_s[0].0 - amps.iter().sum::<C64>());
    let mut tpolys: Vec<&[u32]> = polys.iter().map(|a| a.as_slice()).collect();
    tpolys.push(&zero);
    let w: Vec<C64> = tpolys
        .iter()
        .map(|a| tpolys.iter().zip(&amps).map(|(b, &c)| c * ratio(a, b)).sum())
        .collect();
    let dt = grid.dt();
    let values: Vec<f64> = (0..bins)
        .map(|q| {
            let db = &d_bins[q];
            let mut dterms: Vec<C64> = idx.iter().map(|&b| db[b]).collect();
            dterms.push(per_s[0].1[q] - dterms.iter().sum::<C64>());
            2.0 * dterms.iter().zip(&w).map(|(d, w)| d * w.conj()).sum::<C64>().re / dt
        })
        .collect();
    Ok(GradientTrace::new(grid.bin_centers(), values, format!("E[{}]", objective_tag(objective))))
}
