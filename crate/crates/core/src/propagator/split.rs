//! Fourth-order split-step integrator for `H(t) = H0 - mu eps(t)`.
//!
//! Each grid step is a five-stage Suzuki composition of the symmetric
//! splitting `exp(-i H0 h/2) exp(i h eps mu) exp(-i H0 h/2)`, with the field
//! sampled at each stage midpoint. Every factor is an exact exponential, so
//! the step is unitary to round-off whenever `mu` is Hermitian and `eps` real.
//!
//! Two coupling representations are supported:
//! * real symmetric `mu`: kicks are diagonal in the eigenbasis of `mu`;
//! * general complex `mu` (phase-encoded dipoles): kicks use a scaled Taylor
//!   series and make no unitarity assumption.
//!
//! States are column blocks stored column-major (`ncols` columns of length `n`).

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::field::ControlField;
use crate::linalg::{symmetric_eigen, CMatrix, C64, I};
use crate::propagator::grid::TimeGrid;

pub const STAGES: usize = 5;

struct Scheme {
    weights: [f64; STAGES],
    offsets: [f64; STAGES],
    drifts: [f64; STAGES + 1],
}

fn scheme() -> &'static Scheme {
    static SCHEME: OnceLock<Scheme> = OnceLock::new();
    SCHEME.get_or_init(|| {
        let p = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
        let weights = [p, p, 1.0 - 4.0 * p, p, p];
        let mut offsets = [0.0; STAGES];
        let mut acc = 0.0;
        for s in 0..STAGES {
            offsets[s] = acc + 0.5 * weights[s];
            acc += weights[s];
        }
        let mut drifts = [0.0; STAGES + 1];
        drifts[0] = 0.5 * weights[0];
        for s in 1..STAGES {
            drifts[s] = 0.5 * (weights[s - 1] + weights[s]);
        }
        drifts[STAGES] = 0.5 * weights[STAGES - 1];
        Scheme { weights, offsets, drifts }
    })
}

/// Stage weights (fractions of `dt`) of one composed step.
pub fn stage_weights() -> [f64; STAGES] {
    scheme().weights
}

/// Field values at every kick of the scheme: `n_steps * STAGES` entries,
/// step-major. Values are complex so that mode amplitudes can carry
/// encoding phases.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    grid: TimeGrid,
    values: Vec<C64>,
}

impl FieldSamples {
    pub fn new(field: &ControlField, grid: TimeGrid) -> Self {
        Self::with_mode_factors(field, grid, None)
    }

    /// Samples with mode `k`'s amplitude multiplied by `factors[k]`.
    pub fn with_mode_factors(field: &ControlField, grid: TimeGrid, factors: Option<&[C64]>) -> Self {
        let mut values = vec![C64::default(); grid.n_steps * STAGES];
        for (k, m) in field.modes.iter().enumerate() {
            let amp = factors.map_or(C64::new(1.0, 0.0), |f| f[k]) * m.amplitude;
            if amp == C64::default() {
                continue;
            }
            for (v, c) in values.iter_mut().zip(unit_mode_samples(m.frequency, m.phase, &grid)) {
                *v += amp * c;
            }
        }
        Self { grid, values }
    }

    /// Times at which the kicks sample the field.
    pub fn kick_times(grid: &TimeGrid) -> Vec<f64> {
        let sch = scheme();
        let dt = grid.dt();
        (0..grid.n_steps)
            .flat_map(|q| sch.offsets.iter().map(move |c| (q as f64 + c) * dt))
            .collect()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Adds `h` to the field throughout time bin `bin`.
    pub fn bump(&mut self, bin: usize, h: f64) {
        for v in &mut self.values[bin * STAGES..(bin + 1) * STAGES] {
            *v += h;
        }
    }

    /// Adds another sample set (same grid).
    pub fn add_scaled(&mut self, other: &FieldSamples, c: C64) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += c * o;
        }
    }
}

/// `cos(w t + phi)` at every kick time, by rotation recurrence with periodic
/// exact resync.
fn unit_mode_samples(frequency: f64, phase: f64, grid: &TimeGrid) -> Vec<f64> {
    const RESYNC: usize = 64;
    let sch = scheme();
    let dt = grid.dt();
    let rot = C64::from_polar(1.0, frequency * dt);
    let mut out = vec![0.0; grid.n_steps * STAGES];
    for s in 0..STAGES {
        let mut z = C64::default();
        for q in 0..grid.n_steps {
            z = if q % RESYNC == 0 {
                C64::from_polar(1.0, frequency * (q as f64 + sch.offsets[s]) * dt + phase)
            } else {
                z * rot
            };
            out[q * STAGES + s] = z.re;
        }
    }
    out
}

/// Unit-amplitude samples of every mode, for cheap re-weighting by amplitude.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    grid: TimeGrid,
    modes: Vec<Vec<f64>>,
}

impl ModeBasis {
    pub fn new(field: &ControlField, grid: TimeGrid) -> Self {
        let modes = field.modes.iter().map(|m| unit_mode_samples(m.frequency, m.phase, &grid)).collect();
        Self { grid, modes }
    }

    /// Samples of `sum_k amplitudes[k] cos(w_k t + phi_k)`.
    pub fn samples(&self, amplitudes: &[f64]) -> FieldSamples {
        let mut values = vec![C64::default(); self.grid.n_steps * STAGES];
        for (m, &a) in self.modes.iter().zip(amplitudes) {
            if a == 0.0 {
                continue;
            }
            for (v, &c) in values.iter_mut().zip(m) {
                v.re += a * c;
            }
        }
        FieldSamples { grid: self.grid, values }
    }
}

enum Coupling {
    /// `mu = V diag(lambda) V^T`; `v` row-major, `vt` its transpose.
    Real { v: Vec<f64>, vt: Vec<f64>, lambda: Vec<f64> },
    /// Row-major `mu` and its adjoint, with the max absolute row sum.
    Complex { mu: Vec<C64>, mu_adj: Vec<C64>, row_norm: f64 },
}

/// Integrator for one Hamiltonian on one grid.
pub struct SplitOperator {
    n: usize,
    coupling: Coupling,
    h: [f64; STAGES],
    drift: Vec<Vec<C64>>,
}

impl SplitOperator {
    /// Operator for a real symmetric dipole matrix.
    pub fn real(energies: &[f64], mu: &DMatrix<f64>, grid: &TimeGrid) -> Self {
        let n = energies.len();
        let (lambda, v) = symmetric_eigen(mu);
        let vt = (0..n * n).map(|idx| v[(idx % n, idx / n)]).collect();
        let v = (0..n * n).map(|idx| v[(idx / n, idx % n)]).collect();
        Self::build(energies, Coupling::Real { v, vt, lambda }, grid)
    }

    /// Operator for a general complex coupling.
    pub fn complex(energies: &[f64], mu: &CMatrix, grid: &TimeGrid) -> Self {
        let n = energies.len();
        let mu_rm: Vec<C64> = (0..n * n).map(|idx| mu[(idx / n, idx % n)]).collect();
        let mu_adj: Vec<C64> = (0..n * n).map(|idx| mu[(idx % n, idx / n)].conj()).collect();
        let row_norm = (0..n)
            .map(|r| (0..n).map(|c| mu[(r, c)].norm()).sum::<f64>())
            .chain((0..n).map(|c| (0..n).map(|r| mu[(r, c)].norm()).sum::<f64>()))
            .fold(0.0, f64::max);
        Self::build(energies, Coupling::Complex { mu: mu_rm, mu_adj, row_norm }, grid)
    }

    fn build(energies: &[f64], coupling: Coupling, grid: &TimeGrid) -> Self {
        let sch = scheme();
        let dt = grid.dt();
        let h = sch.weights.map(|w| w * dt);
        let drift = sch
            .drifts
            .iter()
            .map(|a| energies.iter().map(|&e| C64::from_polar(1.0, -e * a * dt)).collect())
            .collect();
        Self { n: energies.len(), coupling, h, drift }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    #[inline]
    fn apply_drift(&self, r: usize, state: &mut [C64], adjoint: bool) {
        let d = &self.drift[r];
        for col in state.chunks_exact_mut(self.n) {
            for (x, p) in col.iter_mut().zip(d) {
                *x *= if adjoint { p.conj() } else { *p };
            }
        }
    }

    #[inline]
    fn apply_kick(&self, h: f64, e: C64, state: &mut [C64], scratch: &mut [C64], adjoint: bool) {
        // exp(0) is the identity exactly; skip the basis round trip
        if e == C64::default() {
            return;
        }
        let n = self.n;
        match &self.coupling {
            Coupling::Real { v, vt, lambda } => {
                macro_rules! fixed {
                    ($($k:literal)*) => {
                        match n {
                            $($k => {
                                for col in state.chunks_exact_mut($k) {
                                    kick_real_fixed::<$k>(v, vt, lambda, h, e, adjoint, col);
                                }
                                return;
                            })*
                            _ => {}
                        }
                    };
                }
                fixed!(2 3 4 5 6 7 8);
                let tmp = &mut scratch[..n];
                for col in state.chunks_exact_mut(n) {
                    for ((t, row), &lam) in tmp.iter_mut().zip(vt.chunks_exact(n)).zip(lambda) {
                        let acc = row.iter().zip(col.iter()).fold(C64::default(), |acc, (&w, &c)| acc + c * w);
                        *t = acc * kick_phase(h * lam, e, adjoint);
                    }
                    for (c, row) in col.iter_mut().zip(v.chunks_exact(n)) {
                        *c = row.iter().zip(tmp.iter()).fold(C64::default(), |acc, (&w, &t)| acc + t * w);
                    }
                }
            }
            Coupling::Complex { mu, mu_adj, row_norm } => {
                let x = I * h * e;
                let (m, x) = if adjoint { (mu_adj, x.conj()) } else { (mu, x) };
                for col in state.chunks_exact_mut(n) {
                    taylor_exp_apply(m, n, x, *row_norm, col, scratch);
                }
            }
        }
    }

    /// `out = mu v` for one column.
    #[inline]
    fn apply_mu(&self, vec: &[C64], out: &mut [C64], tmp: &mut [C64]) {
        let n = self.n;
        match &self.coupling {
            Coupling::Real { v, vt, lambda } => {
                for ((t, row), &lam) in tmp.iter_mut().zip(vt.chunks_exact(n)).zip(lambda) {
                    *t = row.iter().zip(vec.iter()).fold(C64::default(), |acc, (&w, &c)| acc + c * w) * lam;
                }
                for (o, row) in out.iter_mut().zip(v.chunks_exact(n)) {
                    *o = row.iter().zip(tmp.iter()).fold(C64::default(), |acc, (&w, &t)| acc + t * w);
                }
            }
            Coupling::Complex { mu, .. } => {
                for a in 0..n {
                    let mut acc = C64::default();
                    for b in 0..n {
                        acc += mu[a * n + b] * vec[b];
                    }
                    out[a] = acc;
                }
            }
        }
    }

    /// Propagates `state` through all steps of `samples`, calling `on_kick`
    /// after every kick and `on_step` after every completed grid step.
    pub fn run<K, S>(&self, samples: &FieldSamples, state: &mut [C64], mut on_kick: K, mut on_step: S)
    where
        K: FnMut(usize, &[C64]),
        S: FnMut(usize, &[C64]),
    {
        debug_assert_eq!(state.len() % self.n, 0);
        let mut scratch = vec![C64::default(); 3 * self.n];
        let vals = samples.values();
        for q in 0..samples.grid().n_steps {
            for s in 0..STAGES {
                self.apply_drift(s, state, false);
                self.apply_kick(self.h[s], vals[q * STAGES + s], state, &mut scratch, false);
                on_kick(q * STAGES + s, state);
            }
            self.apply_drift(STAGES, state, false);
            on_step(q + 1, state);
        }
    }

    pub fn evolve(&self, samples: &FieldSamples, state: &mut [C64]) {
        self.run(samples, state, |_, _| {}, |_, _| {});
    }

    /// Forward propagation storing the block right after every kick.
    pub fn evolve_recording_kicks(&self, samples: &FieldSamples, state: &mut [C64]) -> Vec<C64> {
        let kicks = samples.values().len();
        let mut record = Vec::with_capacity(kicks * state.len());
        self.run(samples, state, |_, s| record.extend_from_slice(s), |_, _| {});
        record
    }

    /// Backward propagation by the adjoint steps, calling `on_step(q, state)`
    /// when the state has reached grid time `t_q`.
    pub fn run_backward<S>(&self, samples: &FieldSamples, state: &mut [C64], mut on_step: S)
    where
        S: FnMut(usize, &[C64]),
    {
        let mut scratch = vec![C64::default(); 3 * self.n];
        let vals = samples.values();
        for q in (0..samples.grid().n_steps).rev() {
            self.apply_drift(STAGES, state, true);
            for s in (0..STAGES).rev() {
                self.apply_kick(self.h[s], vals[q * STAGES + s], state, &mut scratch, true);
                self.apply_drift(s, state, true);
            }
            on_step(q, state);
        }
    }

    /// Backward sweep of the costate block from final time. Returns, for
    /// every kick `k`, `d Tr[G^dagger U(T)] / d eps_k = i h Tr[L_k^dagger mu psi_k]`
    /// where `L_k^dagger G` is the costate after the kick and `psi_k` the
    /// recorded forward block. `costate` holds `G` on entry and
    /// `U(0)`-frame costate on exit.
    pub fn backward_sensitivities(
        &self,
        samples: &FieldSamples,
        kick_states: &[C64],
        costate: &mut [C64],
    ) -> Vec<C64> {
        let n = self.n;
        let block = costate.len();
        let vals = samples.values();
        let mut out = vec![C64::default(); vals.len()];
        let mut scratch = vec![C64::default(); 3 * n];
        let mut mu_psi = vec![C64::default(); n];
        let mut tmp = vec![C64::default(); n];
        for q in (0..samples.grid().n_steps).rev() {
            self.apply_drift(STAGES, costate, true);
            for s in (0..STAGES).rev() {
                let idx = q * STAGES + s;
                let psi = &kick_states[idx * block..(idx + 1) * block];
                let mut tr = C64::default();
                for (lam, p) in costate.chunks_exact(n).zip(psi.chunks_exact(n)) {
                    self.apply_mu(p, &mut mu_psi, &mut tmp);
                    for a in 0..n {
                        tr += lam[a].conj() * mu_psi[a];
                    }
                }
                out[idx] = I * self.h[s] * tr;
                self.apply_kick(self.h[s], vals[idx], costate, &mut scratch, true);
                self.apply_drift(s, costate, true);
            }
        }
        out
    }
}

/// `exp(i arg e)` for complex `e`, conjugated for the adjoint.
#[inline(always)]
fn kick_phase(arg: f64, e: C64, adjoint: bool) -> C64 {
    let mut f = cis(arg * e.re);
    if e.im != 0.0 {
        f *= (-arg * e.im).exp();
    }
    if adjoint {
        f.conj()
    } else {
        f
    }
}

/// Eigenbasis kick for one column of a compile-time dimension.
#[inline(always)]
fn kick_real_fixed<const N: usize>(v: &[f64], vt: &[f64], lambda: &[f64], h: f64, e: C64, adjoint: bool, col: &mut [C64]) {
    let v = &v[..N * N];
    let vt = &vt[..N * N];
    let lambda: &[f64; N] = lambda.try_into().expect("dimension");
    let col: &mut [C64; N] = col.try_into().expect("dimension");
    let mut tmp = [C64::default(); N];
    for k in 0..N {
        let mut acc = C64::default();
        for a in 0..N {
            acc += col[a] * vt[k * N + a];
        }
        tmp[k] = acc * kick_phase(h * lambda[k], e, adjoint);
    }
    for a in 0..N {
        let mut acc = C64::default();
        for k in 0..N {
            acc += tmp[k] * v[a * N + k];
        }
        col[a] = acc;
    }
}

/// `col <- exp(x M) col` for a small dense row-major `M` by a scaled Taylor
/// series. `scratch` must hold at least `2 n` entries.
fn taylor_exp_apply(m: &[C64], n: usize, x: C64, norm: f64, col: &mut [C64], scratch: &mut [C64]) {
    let r = x.norm() * norm;
    let pieces = if r > 0.5 { (r / 0.5).ceil() as usize } else { 1 };
    let y = x / pieces as f64;
    let (term, rest) = scratch.split_at_mut(n);
    let tmp = &mut rest[..n];
    for _ in 0..pieces {
        term.copy_from_slice(col);
        for k in 1..=40 {
            for a in 0..n {
                let mut acc = C64::default();
                for b in 0..n {
                    acc += m[a * n + b] * term[b];
                }
                tmp[a] = acc;
            }
            let f = y / k as f64;
            let mut tn = 0.0;
            let mut cn = 0.0;
            for a in 0..n {
                term[a] = f * tmp[a];
                col[a] += term[a];
                tn += term[a].norm_sqr();
                cn += col[a].norm_sqr();
            }
            if tn <= 1e-36 * cn {
                break;
            }
        }
    }
}

/// `exp(i x)`; Taylor polynomials for the small arguments typical of a kick.
#[inline]
fn cis(x: f64) -> C64 {
    // (-1)^k / (2k)! and (-1)^k / (2k+1)!
    const C: [f64; 9] = [
        1.0,
        -0.5,
        4.166_666_666_666_666_4e-2,
        -1.388_888_888_888_888_9e-3,
        2.480_158_730_158_730_2e-5,
        -2.755_731_922_398_589_3e-7,
        2.087_675_698_786_810e-9,
        -1.147_074_559_772_972_5e-11,
        4.779_477_332_387_385e-14,
    ];
    const S: [f64; 9] = [
        1.0,
        -1.666_666_666_666_666_6e-1,
        8.333_333_333_333_333e-3,
        -1.984_126_984_126_984e-4,
        2.755_731_922_398_589_3e-6,
        -2.505_210_838_544_172e-8,
        1.605_904_383_682_161_3e-10,
        -7.647_163_731_819_816e-13,
        2.811_457_254_345_520_6e-15,
    ];
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut c = C[8];
        let mut s = S[8];
        for k in (0..8).rev() {
            c = c * x2 + C[k];
            s = s * x2 + S[k];
        }
        C64::new(c, s * x)
    } else {
        let (s, c) = x.sin_cos();
        C64::new(c, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Mode;

    #[test]
    fn weights_sum_to_one() {
        let w = stage_weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let sch = scheme();
        assert!((sch.drifts.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(sch.offsets.iter().all(|&c| (0.0..1.0).contains(&c)));
    }

    #[test]
    fn cis_polynomial_matches_libm() {
        for i in -300..=300 {
            let x = i as f64 * 0.5 / 300.0;
            let z = cis(x);
            assert!((z.re - x.cos()).abs() < 2e-16, "{x}");
            assert!((z.im - x.sin()).abs() < 2e-16, "{x}");
        }
    }

    #[test]
    fn samples_match_direct_evaluation() {
        let field = ControlField::new(
            vec![
                Mode { amplitude: 0.15, frequency: 1.7, phase: 0.3 },
                Mode { amplitude: 0.15, frequency: 3.9, phase: 5.1 },
            ],
            40.0,
        )
        .unwrap();
        let grid = TimeGrid::new(500, 40.0).unwrap();
        let samples = FieldSamples::new(&field, grid);
        let times = FieldSamples::kick_times(&grid);
        for (v, t) in samples.values().iter().zip(times) {
            assert!((v.re - field.value_at(t)).abs() < 1e-13);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn taylor_matches_eigen_kick_for_real_coupling() {
        let sys = crate::system::example_system();
        let grid = TimeGrid::new(10, 2.0).unwrap();
        let real = SplitOperator::real(sys.energies(), sys.dipole(), &grid);
        let cplx = SplitOperator::complex(sys.energies(), &crate::linalg::to_complex(sys.dipole()), &grid);
        let mut a = vec![C64::default(); 5];
        a[0] = C64::new(1.0, 0.0);
        let mut b = a.clone();
        let mut scratch = vec![C64::default(); 15];
        real.apply_kick(0.3, C64::new(0.9, 0.0), &mut a, &mut scratch, false);
        cplx.apply_kick(0.3, C64::new(0.9, 0.0), &mut b, &mut scratch, false);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}
