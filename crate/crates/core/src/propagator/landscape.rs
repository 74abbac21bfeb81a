//! Two-gene objective scans over a chromosome template.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::Chromosome;
use crate::propagator::{evaluate_objective, ObjectiveSpec, TimeGrid};
use crate::system::QuantumSystem;

/// One scanned gene. With `n = 1` the template's own gene value is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanAxis {
    pub gene: usize,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl ScanAxis {
    fn values(&self, template: f64) -> Vec<f64> {
        if self.n == 1 {
            return vec![template];
        }
        let step = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n).map(|k| self.min + k as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeScan {
    pub gene1: usize,
    pub gene2: usize,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// `values[a][b]` at `(axis1[a], axis2[b])`.
    pub values: Vec<Vec<f64>>,
}

impl LandscapeScan {
    pub fn to_csv(&self) -> String {
        let mut s = format!("gene{},gene{},objective\n", self.gene1, self.gene2);
        for (a, x) in self.axis1.iter().enumerate() {
            for (b, y) in self.axis2.iter().enumerate() {
                s.push_str(&format!("{x},{y},{:.17e}\n", self.values[a][b]));
            }
        }
        s
    }

    /// Interior points strictly greater than all eight neighbours.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let v = &self.values;
        let (na, nb) = (v.len(), v.first().map_or(0, |r| r.len()));
        let mut out = Vec::new();
        for a in 1..na.saturating_sub(1) {
            for b in 1..nb.saturating_sub(1) {
                let c = v[a][b];
                let is_max = (a - 1..=a + 1)
                    .flat_map(|x| (b - 1..=b + 1).map(move |y| (x, y)))
                    .filter(|&(x, y)| (x, y) != (a, b))
                    .all(|(x, y)| v[x][y] < c);
                if is_max {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

pub fn landscape_scan(
    system: &QuantumSystem,
    template: &Chromosome,
    duration: f64,
    grid: &TimeGrid,
    objective: &ObjectiveSpec,
    axis1: ScanAxis,
    axis2: ScanAxis,
) -> Result<LandscapeScan> {
    let n_genes = 2 * template.n_modes();
    for ax in [&axis1, &axis2] {
        if ax.gene >= n_genes {
            return Err(validation(format!("gene index {} out of range ({n_genes} genes)", ax.gene)));
        }
        if ax.n == 0 {
            return Err(validation("scan axis needs at least one point"));
        }
    }
    if axis1.gene == axis2.gene {
        return Err(validation("scan axes must vary different genes"));
    }
    let genes = template.genes();
    let axis1_vals = axis1.values(genes[axis1.gene]);
    let axis2_vals = axis2.values(genes[axis2.gene]);
    let values = axis1_vals
        .par_iter()
        .map(|&x| {
            axis2_vals
                .iter()
                .map(|&y| {
                    let mut g = genes.clone();
                    g[axis1.gene] = x;
                    g[axis2.gene] = y;
                    let c = Chromosome::from_genes(&g, template.fixed_amplitude)?;
                    evaluate_objective(system, &c.to_field(duration), grid, objective)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeScan { gene1: axis1.gene, gene2: axis2.gene, axis1: axis1_vals, axis2: axis2_vals, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::example_system;

    fn template() -> Chromosome {
        Chromosome::from_genes(&[1.0, 1.0, 0.5, 0.3, 0.3, 2.0], 0.15).unwrap()
    }

    #[test]
    fn single_point_equals_objective() {
        let sys = example_system();
        let g = TimeGrid::new(250, 20.0).unwrap();
        let obj = ObjectiveSpec::transition(0, 3);
        let ax = |gene| ScanAxis { gene, min: 0.0, max: 4.0, n: 1 };
        let s = landscape_scan(&sys, &template(), 20.0, &g, &obj, ax(0), ax(2)).unwrap();
        let direct = evaluate_objective(&sys, &template().to_field(20.0), &g, &obj).unwrap();
        assert_eq!(s.values, vec![vec![direct]]);
    }

    #[test]
    fn swapping_identical_modes_transposes() {
        let sys = example_system();
        let g = TimeGrid::new(250, 20.0).unwrap();
        let obj = ObjectiveSpec::transition(0, 3);
        let a = ScanAxis { gene: 0, min: 0.5, max: 2.0, n: 3 };
        let b = ScanAxis { gene: 1, min: 0.5, max: 2.0, n: 3 };
        let s = landscape_scan(&sys, &template(), 20.0, &g, &obj, a, b).unwrap();
        // modes 0 and 1 share all parameters, so J(w0 = x, w1 = y) = J(w0 = y, w1 = x)
        for x in 0..3 {
            for y in 0..3 {
                assert!((s.values[x][y] - s.values[y][x]).abs() < 1e-13);
            }
        }
    }
}
