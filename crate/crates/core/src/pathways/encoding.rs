//! Phase encoding `theta_k -> theta_k exp(i gamma_k s)` of selected parameters.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::ControlField;
use crate::linalg::{CMatrix, C64};
use crate::propagator::{check_durations, identity_block, to_interaction_frame, FieldSamples, SplitOperator, TimeGrid};
use crate::system::QuantumSystem;
use crate::uncertainty::ParameterTarget;

pub const DEFAULT_MAX_TOTAL_ORDER: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeRepr", into = "SchemeRepr")]
pub struct EncodingScheme {
    encoded: Vec<ParameterTarget>,
    gammas: Vec<u64>,
    s_points: usize,
    max_total_order: u32,
    polytopes: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    encoded: Vec<ParameterTarget>,
    gammas: Vec<u64>,
    s_points: usize,
    max_total_order: u32,
}

impl TryFrom<SchemeRepr> for EncodingScheme {
    type Error = crate::error::Error;

    fn try_from(r: SchemeRepr) -> Result<Self> {
        EncodingScheme::with_gammas(r.encoded, r.gammas, r.s_points, r.max_total_order)
    }
}

impl From<EncodingScheme> for SchemeRepr {
    fn from(s: EncodingScheme) -> Self {
        SchemeRepr { encoded: s.encoded, gammas: s.gammas, s_points: s.s_points, max_total_order: s.max_total_order }
    }
}

/// All `alpha` in `N^n` with `sum alpha <= m`, graded by total order.
pub fn admissible_polytopes(n: usize, m: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, n: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for a in 0..=left {
            prefix.push(a);
            rec(prefix, n, left - a, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, m, &mut out);
    out.sort_by_key(|a| (a.iter().sum::<u32>(), a.iter().rev().cloned().collect::<Vec<_>>()));
    out
}

impl EncodingScheme {
    /// Default scheme: `gamma_k = (M + 1)^k` (zero-indexed) and the smallest
    /// power-of-two `N_s` exceeding `2 M gamma_max`.
    pub fn new(encoded: Vec<ParameterTarget>, max_total_order: u32) -> Result<Self> {
        let base = max_total_order as u64 + 1;
        let gammas: Vec<u64> = (0..encoded.len() as u32).map(|k| base.pow(k)).collect();
        let top = gammas.last().copied().unwrap_or(1) * max_total_order.max(1) as u64;
        let s_points = (2 * top + 1).next_power_of_two() as usize;
        Self::with_gammas(encoded, gammas, s_points, max_total_order)
    }

    /// Explicit scheme, verified collision-free over every admissible
    /// polytope and Nyquist-safe.
    pub fn with_gammas(encoded: Vec<ParameterTarget>, gammas: Vec<u64>, s_points: usize, max_total_order: u32) -> Result<Self> {
        if encoded.is_empty() {
            return Err(validation("encoding needs at least one parameter"));
        }
        if gammas.len() != encoded.len() {
            return Err(validation("one gamma per encoded parameter is required"));
        }
        if gammas.iter().any(|&g| g == 0) {
            return Err(validation("gammas must be positive"));
        }
        for (a, t) in encoded.iter().enumerate() {
            if encoded[..a].contains(t) {
                return Err(validation(format!("{} encoded twice", t.label())));
            }
        }
        let polytopes = admissible_polytopes(encoded.len(), max_total_order);
        let freq = |a: &[u32]| -> u64 { a.iter().zip(&gammas).map(|(&x, &g)| x as u64 * g).sum() };
        let top = polytopes.iter().map(|a| freq(a)).max().unwrap_or(0);
        if s_points as u64 <= 2 * top {
            return Err(validation(format!("s_points = {s_points} must exceed 2 x {top} (largest encoded frequency)")));
        }
        let mut seen = vec![usize::MAX; s_points];
        for (idx, a) in polytopes.iter().enumerate() {
            let b = (freq(a) % s_points as u64) as usize;
            if seen[b] != usize::MAX {
                return Err(validation(format!(
                    "gamma collision: {:?} and {:?} share frequency {b}",
                    polytopes[seen[b]], a
                )));
            }
            seen[b] = idx;
        }
        Ok(Self { encoded, gammas, s_points, max_total_order, polytopes })
    }

    pub fn encoded(&self) -> &[ParameterTarget] {
        &self.encoded
    }

    pub fn gammas(&self) -> &[u64] {
        &self.gammas
    }

    pub fn s_points(&self) -> usize {
        self.s_points
    }

    pub fn max_total_order(&self) -> u32 {
        self.max_total_order
    }

    pub fn n_encoded(&self) -> usize {
        self.encoded.len()
    }

    /// Admissible polytopes, ordered by total order.
    pub fn polytopes(&self) -> &[Vec<u32>] {
        &self.polytopes
    }

    pub fn frequency(&self, alpha: &[u32]) -> u64 {
        alpha.iter().zip(&self.gammas).map(|(&a, &g)| a as u64 * g).sum()
    }

    /// `s_q = 2 pi q / N_s`.
    pub fn s_grid(&self) -> Vec<f64> {
        (0..self.s_points)
            .map(|q| std::f64::consts::TAU * q as f64 / self.s_points as f64)
            .collect()
    }

    /// Nominal values of the encoded parameters.
    pub fn nominal_values(&self, system: &QuantumSystem, field: &ControlField) -> Vec<f64> {
        self.encoded.iter().map(|t| t.nominal(system, field)).collect()
    }

    /// Checks targets against the system/field; every encoded parameter
    /// needs a nonzero nominal value.
    pub fn validate_for(&self, system: &QuantumSystem, field: &ControlField) -> Result<()> {
        for t in &self.encoded {
            t.validate(system, field.n_modes())?;
            if t.nominal(system, field) == 0.0 {
                return Err(validation(format!(
                    "encoded parameter {} has zero nominal value; pathway normalization is undefined",
                    t.label()
                )));
            }
        }
        Ok(())
    }

    /// Integrator and field samples for the encoded Hamiltonian at `s`.
    pub(crate) fn encoded_dynamics(
        &self,
        system: &QuantumSystem,
        field: &ControlField,
        grid: &TimeGrid,
        s: f64,
    ) -> (SplitOperator, FieldSamples) {
        let n = system.dimension();
        let mut mu = system.dipole().map(|v| C64::new(v, 0.0));
        let mut factors = vec![C64::new(1.0, 0.0); field.n_modes()];
        let mut any_mode = false;
        for (t, &g) in self.encoded.iter().zip(&self.gammas) {
            let ph = C64::from_polar(1.0, g as f64 * s);
            match *t {
                ParameterTarget::Dipole { i, j } => {
                    mu[(i, j)] *= ph;
                    mu[(j, i)] *= ph;
                }
                ParameterTarget::ModeAmplitude { k } => {
                    factors[k] *= ph;
                    any_mode = true;
                }
            }
        }
        let op = SplitOperator::complex(system.energies(), &mu, grid);
        let samples = FieldSamples::with_mode_factors(field, *grid, any_mode.then_some(&factors[..]));
        debug_assert_eq!(mu.nrows(), n);
        (op, samples)
    }
}

/// Interaction-picture `U(T, s)` with every encoded parameter multiplied by
/// `exp(i gamma_k s)`. Not unitary for `s != 0`.
pub fn encoded_propagate(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    scheme: &EncodingScheme,
    s: f64,
) -> Result<CMatrix> {
    check_durations(field, grid)?;
    if !(0.0..std::f64::consts::TAU).contains(&s) {
        return Err(validation(format!("encoding variable s = {s} outside [0, 2 pi)")));
    }
    scheme.validate_for(system, field)?;
    let n = system.dimension();
    let (op, samples) = scheme.encoded_dynamics(system, field, grid, s);
    let mut block = identity_block(n);
    op.evolve(&samples, &mut block);
    Ok(to_interaction_frame(system.energies(), grid.duration, &CMatrix::from_column_slice(n, n, &block)))
}

/// Interaction-picture column `U(T, s) e_from`.
pub(crate) fn encoded_column(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    scheme: &EncodingScheme,
    s: f64,
    from: usize,
) -> Vec<C64> {
    let n = system.dimension();
    let (op, samples) = scheme.encoded_dynamics(system, field, grid, s);
    let mut col = vec![C64::default(); n];
    col[from] = C64::new(1.0, 0.0);
    op.evolve(&samples, &mut col);
    for (c, &e) in col.iter_mut().zip(system.energies()) {
        *c *= C64::from_polar(1.0, e * grid.duration);
    }
    col
}
