//! Order-resolved Dyson terms of the interaction-picture propagator.
//!
//! `U^m(t) = i int_0^t eps(tau) mu_I(tau) U^{m-1}(tau) dtau`, `U^0 = I`, with
//! `mu_I(tau)_{ab} = mu_ab exp(i (E_a - E_b) tau)`. Each grid step is one
//! Chebyshev-Lobatto panel; the cumulative integral inside a panel is the
//! exact integral of the interpolating polynomial.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::ControlField;
use crate::linalg::{CMatrix, C64, I};
use crate::propagator::{check_durations, TimeGrid};
use crate::system::QuantumSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysonOptions {
    /// Orders always computed.
    pub min_order: usize,
    /// Stop once the newest term's max-norm over the panel nodes is below this.
    pub tail_tol: f64,
    /// Hard cap on the order.
    pub max_order: usize,
    /// Chebyshev-Lobatto nodes per grid step.
    pub nodes_per_step: usize,
}

impl Default for DysonOptions {
    fn default() -> Self {
        Self { min_order: 12, tail_tol: 1e-8, max_order: 400, nodes_per_step: 12 }
    }
}

#[derive(Debug, Clone)]
pub struct DysonDecomposition {
    /// `[U^0(T), U^1(T), ..., U^M(T)]`, interaction picture.
    pub orders: Vec<CMatrix>,
    pub truncation_order: usize,
    /// Max-norm of the last computed term over all quadrature nodes.
    pub tail_norm: f64,
    /// Whether `tail_norm` reached the requested tolerance.
    pub converged: bool,
}

impl DysonDecomposition {
    /// `sum_{m <= upto} U^m(T)`.
    pub fn partial_sum(&self, upto: usize) -> CMatrix {
        let n = self.orders[0].nrows();
        self.orders
            .iter()
            .take(upto + 1)
            .fold(CMatrix::zeros(n, n), |acc, u| acc + u)
    }

    /// Element `(to, from)` of every order.
    pub fn element(&self, from: usize, to: usize) -> Vec<C64> {
        self.orders.iter().map(|u| u[(to, from)]).collect()
    }
}

/// Cumulative integration matrix on `p` Chebyshev-Lobatto nodes of
/// `[-1, 1]` (ascending): `(S f)_j = int_{-1}^{x_j} p_f(x) dx`.
fn cumulative_matrix(p: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..p)
        .map(|j| -(std::f64::consts::PI * j as f64 / (p - 1) as f64).cos())
        .collect();
    let cheb = |k: usize, x: f64| -> f64 {
        let (mut t0, mut t1) = (1.0, x);
        match k {
            0 => 1.0,
            1 => x,
            _ => {
                for _ in 2..=k {
                    let t2 = 2.0 * x * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                }
                t1
            }
        }
    };
    let anti = |k: usize, x: f64| -> f64 {
        match k {
            0 => x,
            1 => 0.5 * x * x,
            _ => cheb(k + 1, x) / (2.0 * (k + 1) as f64) - cheb(k - 1, x) / (2.0 * (k - 1) as f64),
        }
    };
    let v = DMatrix::from_fn(p, p, |j, k| cheb(k, x[j]));
    let w = DMatrix::from_fn(p, p, |j, k| anti(k, x[j]) - anti(k, -1.0));
    // S = W V^{-1}  <=>  V^T S^T = W^T
    let st = v.transpose().lu().solve(&w.transpose()).expect("Chebyshev Vandermonde is invertible");
    (x, st.transpose())
}

struct DysonWorkspace {
    n: usize,
    p: usize,
    n_steps: usize,
    half_dt: f64,
    s: DMatrix<f64>,
    /// `i eps(tau_g) mu_I(tau_g)` per node, column-major.
    kernel: Vec<C64>,
}

impl DysonWorkspace {
    fn new(system: &QuantumSystem, field: &ControlField, grid: &TimeGrid, p: usize) -> Self {
        let n = system.dimension();
        let (x, s) = cumulative_matrix(p);
        let dt = grid.dt();
        let n_nodes = grid.n_steps * (p - 1) + 1;
        let mu = system.dipole();
        let e = system.energies();
        let mut kernel = vec![C64::default(); n_nodes * n * n];
        for g in 0..n_nodes {
            let (q, j) = if g == n_nodes - 1 { (grid.n_steps - 1, p - 1) } else { (g / (p - 1), g % (p - 1)) };
            let tau = (q as f64 + 0.5 * (x[j] + 1.0)) * dt;
            let eps = field.value_at(tau);
            let k = &mut kernel[g * n * n..(g + 1) * n * n];
            for b in 0..n {
                for a in 0..n {
                    let m = mu[(a, b)];
                    if m != 0.0 {
                        k[b * n + a] = I * eps * m * C64::from_polar(1.0, (e[a] - e[b]) * tau);
                    }
                }
            }
        }
        Self { n, p, n_steps: grid.n_steps, half_dt: 0.5 * dt, s, kernel }
    }

    fn n_nodes(&self) -> usize {
        self.n_steps * (self.p - 1) + 1
    }

    /// Next order from the previous one at all nodes; returns it with its
    /// max-norm over nodes.
    fn next(&self, prev: &[C64]) -> (Vec<C64>, f64) {
        let (n, p) = (self.n, self.p);
        let nn = n * n;
        let mut out = vec![C64::default(); self.n_nodes() * nn];
        let mut f = vec![C64::default(); p * nn];
        for q in 0..self.n_steps {
            let g0 = q * (p - 1);
            for k in 0..p {
                let g = g0 + k;
                let kern = &self.kernel[g * nn..(g + 1) * nn];
                let u = &prev[g * nn..(g + 1) * nn];
                let fk = &mut f[k * nn..(k + 1) * nn];
                for c in 0..n {
                    for a in 0..n {
                        let mut acc = C64::default();
                        for b in 0..n {
                            acc += kern[b * n + a] * u[c * n + b];
                        }
                        fk[c * n + a] = acc;
                    }
                }
            }
            let (head, tail) = out.split_at_mut((g0 + 1) * nn);
            let base = &head[g0 * nn..];
            for j in 1..p {
                let dst = &mut tail[(j - 1) * nn..j * nn];
                dst.copy_from_slice(base);
                for k in 0..p {
                    let w = self.half_dt * self.s[(j, k)];
                    if w == 0.0 {
                        continue;
                    }
                    for (d, v) in dst.iter_mut().zip(&f[k * nn..(k + 1) * nn]) {
                        *d += w * v;
                    }
                }
            }
        }
        let norm = out.iter().map(|z| z.norm()).fold(0.0, f64::max);
        (out, norm)
    }
}

fn run(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    opts: &DysonOptions,
    fixed: Option<usize>,
) -> Result<DysonDecomposition> {
    check_durations(field, grid)?;
    if opts.nodes_per_step < 3 {
        return Err(validation("Dyson panels need at least 3 nodes"));
    }
    let ws = DysonWorkspace::new(system, field, grid, opts.nodes_per_step);
    let n = ws.n;
    let nn = n * n;
    let last = ws.n_nodes() - 1;
    let mut cur = vec![C64::default(); ws.n_nodes() * nn];
    for g in 0..ws.n_nodes() {
        for k in 0..n {
            cur[g * nn + k * n + k] = C64::new(1.0, 0.0);
        }
    }
    let mut orders = vec![CMatrix::identity(n, n)];
    let mut tail_norm = 1.0;
    let cap = fixed.unwrap_or(opts.max_order);
    while orders.len() <= cap {
        let (next, norm) = ws.next(&cur);
        orders.push(CMatrix::from_column_slice(n, n, &next[last * nn..]));
        cur = next;
        tail_norm = norm;
        let m = orders.len() - 1;
        if fixed.is_none() && m >= opts.min_order && norm < opts.tail_tol {
            break;
        }
    }
    Ok(DysonDecomposition {
        truncation_order: orders.len() - 1,
        orders,
        converged: tail_norm < opts.tail_tol,
        tail_norm,
    })
}

/// Dyson terms up to order `m` exactly.
pub fn dyson_terms(system: &QuantumSystem, field: &ControlField, grid: &TimeGrid, m: usize) -> Result<DysonDecomposition> {
    if m == 0 {
        return Err(validation("Dyson truncation order must be at least 1"));
    }
    run(system, field, grid, &DysonOptions::default(), Some(m))
}

/// Dyson terms with the order raised until the tail norm drops below
/// `opts.tail_tol` (or `opts.max_order` is hit; see `converged`).
pub fn dyson_terms_auto(
    system: &QuantumSystem,
    field: &ControlField,
    grid: &TimeGrid,
    opts: &DysonOptions,
) -> Result<DysonDecomposition> {
    if opts.min_order == 0 || opts.max_order < opts.min_order {
        return Err(validation("Dyson options need 1 <= min_order <= max_order"));
    }
    run(system, field, grid, opts, None)
}

/// Direct and cross terms of `|sum_m U^m_{to,from}|^2`.
#[derive(Debug, Clone, Serialize)]
pub struct InterferenceTable {
    /// `|U^m|^2`.
    pub direct_terms: Vec<f64>,
    /// Row `m` holds `2 Re(U^m conj(U^{m'}))` for `m' < m`.
    pub cross_terms: Vec<Vec<f64>>,
    pub direct_sum: f64,
    pub cross_sum: f64,
    /// `|sum_m U^m|^2`.
    pub total: f64,
}

impl InterferenceTable {
    /// `|direct + cross - total|`.
    pub fn identity_residual(&self) -> f64 {
        (self.direct_sum + self.cross_sum - self.total).abs()
    }

    /// Long-format CSV: `m,m_prime,term` (`m_prime = m` for direct terms).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,m_prime,term\n");
        for (m, d) in self.direct_terms.iter().enumerate() {
            s.push_str(&format!("{m},{m},{d:.17e}\n"));
            for (mp, c) in self.cross_terms[m].iter().enumerate() {
                s.push_str(&format!("{m},{mp},{c:.17e}\n"));
            }
        }
        s
    }
}

pub fn order_interference(decomp: &DysonDecomposition, from: usize, to: usize) -> InterferenceTable {
    let u = decomp.element(from, to);
    let direct_terms: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
    let cross_terms: Vec<Vec<f64>> = (0..u.len())
        .map(|m| (0..m).map(|mp| 2.0 * (u[m] * u[mp].conj()).re).collect())
        .collect();
    let total = u.iter().sum::<C64>().norm_sqr();
    InterferenceTable {
        direct_sum: direct_terms.iter().sum(),
        cross_sum: cross_terms.iter().flatten().sum(),
        direct_terms,
        cross_terms,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Mode;
    use crate::linalg::{identity, max_abs_diff};
    use crate::system::example_system;

    #[test]
    fn cumulative_matrix_integrates_polynomials() {
        let (x, s) = cumulative_matrix(12);
        // f = 3x^2 + 1 -> F(x) - F(-1) = x^3 + x + 2
        let f: Vec<f64> = x.iter().map(|&t| 3.0 * t * t + 1.0).collect();
        for j in 0..12 {
            let got: f64 = (0..12).map(|k| s[(j, k)] * f[k]).sum();
            let want = x[j].powi(3) + x[j] + 2.0;
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_field_has_no_higher_orders() {
        let d = dyson_terms(&example_system(), &ControlField::zero(3, 10.0), &TimeGrid::new(50, 10.0).unwrap(), 4)
            .unwrap();
        assert_eq!(d.orders[0], identity(5));
        for u in &d.orders[1..] {
            assert_eq!(crate::linalg::max_abs(u), 0.0);
        }
    }

    #[test]
    fn converges_to_propagator() {
        let sys = example_system();
        let f = ControlField::new(
            vec![
                Mode { amplitude: 0.05, frequency: 1.5, phase: 0.0 },
                Mode { amplitude: 0.05, frequency: 0.5, phase: 1.0 },
            ],
            20.0,
        )
        .unwrap();
        // fine grid: the split-step reference must be well below 1e-8
        let g = TimeGrid::new(1000, 20.0).unwrap();
        let d = dyson_terms_auto(&sys, &f, &g, &DysonOptions::default()).unwrap();
        assert!(d.converged);
        let u = crate::propagator::propagate(&sys, &f, &g).unwrap().interaction_final;
        let err = max_abs_diff(&d.partial_sum(d.truncation_order), &u);
        assert!(err < 1e-8, "{err} {}", d.truncation_order);
    }

    #[test]
    fn interference_identity_and_single_order() {
        let sys = example_system();
        let f = ControlField::new(vec![Mode { amplitude: 0.1, frequency: 1.5, phase: 0.3 }], 10.0).unwrap();
        let d = dyson_terms(&sys, &f, &TimeGrid::new(125, 10.0).unwrap(), 8).unwrap();
        let t = order_interference(&d, 0, 3);
        assert!(t.identity_residual() < 1e-12);

        let single = DysonDecomposition {
            orders: vec![CMatrix::zeros(2, 2), CMatrix::from_element(2, 2, C64::new(0.3, 0.4))],
            truncation_order: 1,
            tail_norm: 0.0,
            converged: true,
        };
        let t = order_interference(&single, 0, 1);
        assert!(t.cross_terms.iter().flatten().all(|&c| c == 0.0));
        assert!((t.total - 0.25).abs() < 1e-15);
    }
}
