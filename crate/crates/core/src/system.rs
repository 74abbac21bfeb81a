//! Quantum system definition: a diagonal drift Hamiltonian and a real
//! symmetric dipole coupling, `H(t) = H0 - mu * eps(t)` with hbar = 1.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Drift energies and dipole matrix of an `N`-level system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct QuantumSystem {
    energies: Vec<f64>,
    dipole: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    energies: Vec<f64>,
    dipole: Vec<Vec<f64>>,
}

impl TryFrom<SystemRepr> for QuantumSystem {
    type Error = Error;

    fn try_from(repr: SystemRepr) -> Result<Self> {
        QuantumSystem::new(repr.energies, repr.dipole)
    }
}

impl From<QuantumSystem> for SystemRepr {
    fn from(sys: QuantumSystem) -> Self {
        let n = sys.dimension();
        SystemRepr {
            dipole: (0..n)
                .map(|i| (0..n).map(|j| sys.dipole[(i, j)]).collect())
                .collect(),
            energies: sys.energies,
        }
    }
}

impl QuantumSystem {
    /// Builds a system from its energy ladder and the rows of the dipole
    /// matrix. Energies must be finite and sorted non-decreasing; the dipole
    /// must be square, finite and exactly symmetric.
    pub fn new(energies: Vec<f64>, dipole_rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(validation("system dimension must be positive"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(validation("energies must be finite"));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(validation("energies must be sorted non-decreasing"));
        }
        if dipole_rows.len() != n || dipole_rows.iter().any(|r| r.len() != n) {
            return Err(validation(format!("dipole matrix must be {n}x{n}")));
        }
        let dipole = DMatrix::from_fn(n, n, |i, j| dipole_rows[i][j]);
        if dipole.iter().any(|v| !v.is_finite()) {
            return Err(validation("dipole entries must be finite"));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dipole[(i, j)] != dipole[(j, i)] {
                    return Err(validation(format!(
                        "dipole matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { energies, dipole })
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dipole(&self) -> &DMatrix<f64> {
        &self.dipole
    }

    /// Bohr frequency `E_j - E_i`.
    pub fn transition_frequency(&self, j: usize, i: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    /// Copy of the system with the symmetric dipole pair `(i, j)`/`(j, i)`
    /// replaced by `value`.
    pub fn with_dipole_element(&self, i: usize, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.dipole[(i, j)] = value;
        out.dipole[(j, i)] = value;
        out
    }

    /// Upper-triangle couplings `(i, j, mu_ij)` with `i < j` and nonzero value.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let n = self.dimension();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.dipole[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// The five-level test system with a ladder spacing of 0.5 in which the
/// target level (index 3) couples to levels 0, 1 and 4. The direct 0-3
/// coupling is half as strong as the others.
pub fn example_system() -> QuantumSystem {
    let energies = vec![0.0, 0.5, 1.0, 1.5, 2.0];
    let dipole = vec![
        vec![0.0, 2.0, 2.0, 1.0, 0.0],
        vec![2.0, 0.0, 0.0, 2.0, 0.0],
        vec![2.0, 0.0, 0.0, 0.0, 2.0],
        vec![1.0, 2.0, 0.0, 0.0, 2.0],
        vec![0.0, 0.0, 2.0, 2.0, 0.0],
    ];
    QuantumSystem::new(energies, dipole).expect("built-in system is valid")
}

/// Looks up a built-in system by name.
pub fn builtin_system(name: &str) -> Option<QuantumSystem> {
    match name {
        "paper5" => Some(example_system()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_energies_and_dipoles() {
        let sys = example_system();
        assert_eq!(sys.energies(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        let mu = sys.dipole();
        assert_eq!(mu[(0, 3)], 1.0);
        assert_eq!(mu[(0, 1)], 2.0);
        assert_eq!(mu[(0, 2)], 2.0);
        for i in 0..5 {
            assert_eq!(mu[(i, i)], 0.0);
            for j in 0..5 {
                assert_eq!(mu[(i, j)], mu[(j, i)]);
            }
        }
    }

    #[test]
    fn target_level_couplings() {
        let sys = example_system();
        let to_target: Vec<usize> = (0..5).filter(|&k| sys.dipole()[(3, k)] != 0.0).collect();
        assert_eq!(to_target, vec![0, 1, 4]);
    }

    #[test]
    fn rejects_asymmetric_dipole() {
        let err = QuantumSystem::new(vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![0.5, 0.0]]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_unsorted_energies() {
        let err = QuantumSystem::new(vec![1.0, 0.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(err.is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let sys = example_system();
        let text = serde_json::to_string(&sys).unwrap();
        let back: QuantumSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sys);
        let bad = r#"{"energies":[0.0,1.0],"dipole":[[0.0,1.0],[2.0,0.0]]}"#;
        assert!(serde_json::from_str::<QuantumSystem>(bad).is_err());
    }
}
