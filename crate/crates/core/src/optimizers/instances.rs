//! Per-instance tables: fixed genomes evaluated under explicit per-mode
//! amplitude sets and compared against a reference matrix whose layout is
//! not known in advance.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::optimizers::NominalFitness;

const BUNDLED_SOLUTIONS: &str = include_str!("../../../../data/reference-tables/solutions.csv");
const BUNDLED_AMPLITUDES: &str = include_str!("../../../../data/reference-tables/amplitudes.csv");
const BUNDLED_PROBABILITIES: &str = include_str!("../../../../data/reference-tables/probabilities.csv");

/// Labelled numeric CSV: `#` comment lines, one header line, then rows whose
/// first cell is a label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledTable {
    pub columns: Vec<String>,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl LabelledTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| validation("table has no header line"))?;
        let columns: Vec<String> = header.split(',').skip(1).map(|c| c.trim().to_string()).collect();
        if columns.is_empty() {
            return Err(validation("table has no value columns"));
        }
        let (mut labels, mut rows) = (Vec::new(), Vec::new());
        for line in lines {
            let mut cells = line.split(',').map(str::trim);
            let label = cells.next().unwrap_or_default().to_string();
            let row = cells
                .map(|c| c.parse::<f64>().map_err(|_| validation(format!("row {label}: '{c}' is not a number"))))
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != columns.len() {
                return Err(validation(format!("row {label} has {} values, expected {}", row.len(), columns.len())));
            }
            labels.push(label);
            rows.push(row);
        }
        Ok(Self { columns, labels, rows })
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

/// Genomes, amplitude sets and the reference matrix. `reference[r][c]` is
/// indexed by reference row and column; which of them denotes the solution is
/// what [`ColumnMapping`] decides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTables {
    /// One genome per solution.
    pub solutions: Vec<Vec<f64>>,
    /// One per-mode amplitude vector per instance.
    pub amplitudes: Vec<Vec<f64>>,
    pub reference: Vec<Vec<f64>>,
}

impl InstanceTables {
    /// Tables shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_SOLUTIONS, BUNDLED_AMPLITUDES, BUNDLED_PROBABILITIES).expect("bundled tables are valid")
    }

    /// Reads `solutions.csv`, `amplitudes.csv` and `probabilities.csv` from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(Error::from);
        Self::parse(&read("solutions.csv")?, &read("amplitudes.csv")?, &read("probabilities.csv")?)
    }

    /// Solutions and amplitude sets are stored column-wise, the reference
    /// row-wise.
    pub fn parse(solutions: &str, amplitudes: &str, reference: &str) -> Result<Self> {
        let (s, a, r) = (LabelledTable::parse(solutions)?, LabelledTable::parse(amplitudes)?, LabelledTable::parse(reference)?);
        let out = Self {
            solutions: (0..s.columns.len()).map(|c| s.column(c)).collect(),
            amplitudes: (0..a.columns.len()).map(|c| a.column(c)).collect(),
            reference: r.rows,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let (ns, ni) = (self.solutions.len(), self.amplitudes.len());
        if ns == 0 || ni == 0 {
            return Err(validation("at least one solution and one instance are required"));
        }
        if ns != ni {
            return Err(validation("both column mappings need as many solutions as instances"));
        }
        if self.solutions.iter().any(|g| g.len() != 2 * self.amplitudes[0].len()) || self.amplitudes.iter().any(|a| a.len() != self.amplitudes[0].len()) {
            return Err(validation("every genome needs two genes per amplitude-set mode"));
        }
        if self.reference.len() != ns || self.reference.iter().any(|r| r.len() != ni) {
            return Err(validation(format!("reference matrix must be {ns}x{ni}")));
        }
        Ok(())
    }
}

/// How the reference matrix is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnMapping {
    /// Reference rows are solutions and column `c` is amplitude set `c`.
    SolutionRows,
    /// Reference rows are amplitude sets and column `c` is solution `c`.
    InstanceRows,
}

impl ColumnMapping {
    pub const ALL: [ColumnMapping; 2] = [ColumnMapping::SolutionRows, ColumnMapping::InstanceRows];

    /// `computed[solution][instance]` rearranged into the reference layout.
    pub fn arrange(self, computed: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match self {
            ColumnMapping::SolutionRows => computed.to_vec(),
            ColumnMapping::InstanceRows => (0..computed[0].len()).map(|i| computed.iter().map(|r| r[i]).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub mapping: ColumnMapping,
    /// Computed values in the reference layout.
    pub predicted: Vec<Vec<f64>>,
    pub max_abs_error: f64,
    /// Row of the largest value in each column.
    pub column_winners: Vec<usize>,
    /// Column winners coincide with those of the reference.
    pub winners_reproduced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    /// `computed[solution][instance]`.
    pub computed: Vec<Vec<f64>>,
    pub reference: Vec<Vec<f64>>,
    pub reference_winners: Vec<usize>,
    pub mappings: Vec<MappingReport>,
    pub tolerance: f64,
}

impl InstanceReport {
    /// Mapping with the smallest maximum error.
    pub fn best(&self) -> &MappingReport {
        self.mappings.iter().min_by(|a, b| a.max_abs_error.total_cmp(&b.max_abs_error)).expect("two mappings")
    }

    pub fn values_match(&self) -> bool {
        self.best().max_abs_error <= self.tolerance
    }

    pub fn winners_reproduced(&self) -> bool {
        self.mappings.iter().any(|m| m.winners_reproduced)
    }

    /// Rows `mapping,row,col,predicted,reference,error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mapping,row,col,predicted,reference,error\n");
        for m in &self.mappings {
            let name = serde_json::to_value(m.mapping).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            for (r, row) in m.predicted.iter().enumerate() {
                for (c, &p) in row.iter().enumerate() {
                    let q = self.reference[r][c];
                    out.push_str(&format!("{name},{r},{c},{p:.6},{q:.4},{:.6}\n", p - q));
                }
            }
        }
        out
    }
}

fn column_winners(m: &[Vec<f64>]) -> Vec<usize> {
    (0..m[0].len())
        .map(|c| (0..m.len()).max_by(|&a, &b| m[a][c].total_cmp(&m[b][c])).expect("non-empty"))
        .collect()
}

/// `out[s][i]`: probability of solution `s` with mode amplitudes of set `i`.
pub fn instance_matrix(fitness: &NominalFitness, tables: &InstanceTables) -> Result<Vec<Vec<f64>>> {
    tables.validate()?;
    tables
        .solutions
        .par_iter()
        .map(|g| tables.amplitudes.iter().map(|a| fitness.probability_with_amplitudes(g, a)).collect())
        .collect()
}

/// Evaluates every solution under every amplitude set and scores both layouts
/// against the reference.
pub fn compare_instances(fitness: &NominalFitness, tables: &InstanceTables, tolerance: f64) -> Result<InstanceReport> {
    let computed = instance_matrix(fitness, tables)?;
    let reference_winners = column_winners(&tables.reference);
    let mappings = ColumnMapping::ALL
        .iter()
        .map(|&mapping| {
            let predicted = mapping.arrange(&computed);
            let max_abs_error = predicted
                .iter()
                .zip(&tables.reference)
                .flat_map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let winners = column_winners(&predicted);
            MappingReport { mapping, max_abs_error, winners_reproduced: winners == reference_winners, column_winners: winners, predicted }
        })
        .collect();
    Ok(InstanceReport { computed, reference: tables.reference.clone(), reference_winners, mappings, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_shape() {
        let t = InstanceTables::bundled();
        assert_eq!(t.solutions.len(), 4);
        assert!(t.solutions.iter().all(|g| g.len() == 14));
        assert_eq!(t.amplitudes[1][1], 0.2271);
        assert_eq!(t.reference[1][1], 0.9319);
        assert_eq!(column_winners(&t.reference), vec![0, 1, 2, 3]);
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        assert!(LabelledTable::parse("# c\nk,a,b\nx,1,2\ny,3\n").is_err());
        assert!(LabelledTable::parse("k,a\nx,nope\n").is_err());
        let t = LabelledTable::parse("# c\n\nk,a,b\nx,1,2\n").unwrap();
        assert_eq!(t.labels, vec!["x"]);
        assert_eq!(t.column(1), vec![2.0]);
    }

    #[test]
    fn instance_rows_transpose() {
        let m = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        assert_eq!(ColumnMapping::InstanceRows.arrange(&m), vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!(ColumnMapping::SolutionRows.arrange(&m), m);
    }
}
