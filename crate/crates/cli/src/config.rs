//! Experiment configuration. Every field has an explicit default so the
//! resolved echo is complete; resolution is idempotent, so feeding the echo
//! back reproduces a run bit for bit.

use std::path::Path;

use qpr::moments::{MomentSpec, DEFAULT_POLAR_BINS};
use qpr::optimizers::{AcromuseConfig, GAConfig, InstanceTables};
use qpr::pathways::{default_paper5_encoding, EncodingScheme, HessianOptions, DEFAULT_RETENTION_TOL};
use qpr::propagator::{ObjectiveSpec, ScanAxis, TimeGrid};
use qpr::{builtin_system, Chromosome, ControlField, Error, FieldBounds, ParameterDistribution, QuantumSystem, Result, UncertainParameter};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemConfig {
    Builtin(String),
    Inline(QuantumSystem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub n_modes: usize,
    /// Amplitude shared by every mode.
    pub amplitude: f64,
    /// Per-mode amplitudes overriding `amplitude` where a single field is evaluated.
    pub mode_amplitudes: Option<Vec<f64>>,
    pub duration: f64,
    /// `[w_1..w_K, phi_1..phi_K]`.
    pub genes: Vec<f64>,
    pub bounds: FieldBounds,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            n_modes: 7,
            amplitude: 0.15,
            mode_amplitudes: None,
            duration: 40.0,
            genes: InstanceTables::bundled().solutions[0].clone(),
            bounds: FieldBounds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dt: f64,
    /// Filled from `dt` during resolution when absent.
    pub n_steps: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dt: qpr::propagator::DEFAULT_DT, n_steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyConfig {
    /// Uncertain parameters; these are also the encoded parameters.
    pub parameters: Vec<UncertainParameter>,
    /// Relative gaussian noise on every mode amplitude for noisy optimization.
    pub amplitude_noise: f64,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self {
            parameters: default_paper5_encoding()
                .into_iter()
                .map(|t| UncertainParameter::new(t, ParameterDistribution::relative_gaussian(0.05)))
                .collect(),
            amplitude_noise: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    pub max_total_order: u32,
    pub retention_tol: f64,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self { max_total_order: 10, retention_tol: DEFAULT_RETENTION_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Dyson order for the order-resolved tables; `None` skips them.
    pub dyson_order: Option<usize>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { dyson_order: Some(12) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub axis1: ScanAxis,
    pub axis2: ScanAxis,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self { axis1: ScanAxis { gene: 0, min: 0.05, max: 4.0, n: 41 }, axis2: ScanAxis { gene: 1, min: 0.05, max: 4.0, n: 41 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsConfig {
    pub mc_samples: usize,
    pub polar_bins: usize,
    pub sensitivity_threshold: f64,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        Self { mc_samples: 20_000, polar_bins: DEFAULT_POLAR_BINS, sensitivity_threshold: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nsga2Config {
    pub ga: GAConfig,
    /// Target confidence halfwidth of every `E[P]` estimate.
    pub halfwidth: f64,
    pub confidence: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self { ga: GAConfig { population_size: 80, generations: 150, ..Default::default() }, halfwidth: 0.02, confidence: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Keep the configured grid and truncation settings.
    Standard,
    Fast,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub from: usize,
    pub to: usize,
    pub field: FieldConfig,
    pub grid: GridConfig,
    pub uncertainty: UncertaintyConfig,
    pub encoding: EncodingConfig,
    pub simulate: SimulateConfig,
    pub landscape: LandscapeConfig,
    pub moments: MomentsConfig,
    pub hessian: HessianOptions,
    pub tga: GAConfig,
    pub acromuse: AcromuseConfig,
    pub nsga2: Nsga2Config,
    pub precision: Precision,
    pub seed: u64,
    pub output: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::Builtin("paper5".into()),
            from: 0,
            to: 3,
            field: FieldConfig::default(),
            grid: GridConfig::default(),
            uncertainty: UncertaintyConfig::default(),
            encoding: EncodingConfig::default(),
            simulate: SimulateConfig::default(),
            landscape: LandscapeConfig::default(),
            moments: MomentsConfig::default(),
            hessian: HessianOptions::default(),
            tga: GAConfig::default(),
            acromuse: AcromuseConfig::default(),
            nsga2: Nsga2Config::default(),
            precision: Precision::Standard,
            seed: 0,
            output: "qpr-out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies overrides and presets, fills derived fields and validates.
    pub fn resolve(mut self, seed: Option<u64>, precision: Option<Precision>, output: Option<&Path>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(p) = precision {
            self.precision = p;
        }
        if let Some(o) = output {
            self.output = o.display().to_string();
        }
        match self.precision {
            Precision::Standard => {}
            Precision::Fast => {
                self.grid = GridConfig { dt: 0.16, n_steps: None };
                self.encoding.retention_tol = 1e-3;
            }
            Precision::Strict => {
                self.grid = GridConfig { dt: 0.02, n_steps: None };
                self.encoding.retention_tol = 1e-6;
            }
        }
        if !(self.grid.dt > 0.0 && self.grid.dt.is_finite()) {
            return Err(Error::Config("grid.dt must be positive".into()));
        }
        if self.grid.n_steps.is_none() {
            self.grid.n_steps = Some((self.field.duration / self.grid.dt).round().max(1.0) as usize);
        }
        self.tga.seed = self.seed;
        self.acromuse.ga.seed = self.seed;
        self.nsga2.ga.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let sys = self.system()?;
        let n = sys.dimension();
        if self.from >= n || self.to >= n {
            return Err(Error::Config(format!("transition {} -> {} out of range for N = {n}", self.from, self.to)));
        }
        let f = &self.field;
        if f.n_modes == 0 || f.genes.len() != 2 * f.n_modes {
            return Err(Error::Config(format!("field.genes needs 2 * n_modes = {} values", 2 * f.n_modes)));
        }
        if let Some(a) = &f.mode_amplitudes {
            if a.len() != f.n_modes {
                return Err(Error::Config("field.mode_amplitudes needs one value per mode".into()));
            }
        }
        f.bounds.validate()?;
        self.grid()?;
        self.tga.validate()?;
        self.acromuse.validate()?;
        self.nsga2.ga.validate()?;
        self.spec().validate(&sys, &self.field()?)?;
        self.scheme()?;
        Ok(())
    }

    pub fn system(&self) -> Result<QuantumSystem> {
        match &self.system {
            SystemConfig::Builtin(name) => builtin_system(name).ok_or_else(|| Error::Config(format!("unknown built-in system '{name}'"))),
            SystemConfig::Inline(s) => Ok(s.clone()),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.n_steps.unwrap_or(1), self.field.duration)
    }

    pub fn chromosome(&self) -> Result<Chromosome> {
        Chromosome::from_genes(&self.field.genes, self.field.amplitude)
    }

    /// The configured field, with per-mode amplitudes applied.
    pub fn field(&self) -> Result<ControlField> {
        let field = self.chromosome()?.to_field(self.field.duration);
        Ok(match &self.field.mode_amplitudes {
            Some(a) => field.with_amplitudes(a),
            None => field,
        })
    }

    pub fn objective(&self) -> ObjectiveSpec {
        ObjectiveSpec::transition(self.from, self.to)
    }

    pub fn spec(&self) -> MomentSpec {
        MomentSpec::new(self.uncertainty.parameters.clone())
    }

    pub fn scheme(&self) -> Result<EncodingScheme> {
        let targets = self.uncertainty.parameters.iter().map(|p| p.target).collect();
        EncodingScheme::new(targets, self.encoding.max_total_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_is_idempotent() {
        let once = ExperimentConfig::default().resolve(Some(7), Some(Precision::Fast), None).unwrap();
        let text = serde_json::to_string(&once).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.clone().resolve(None, None, None).unwrap(), once);
        assert_eq!(once.grid.n_steps, Some(250));
        assert_eq!(once.nsga2.ga.seed, 7);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_genes() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sytem":"paper5"}"#).is_err());
        let mut c = ExperimentConfig::default();
        c.field.genes.pop();
        assert!(matches!(c.resolve(None, None, None), Err(Error::Config(_))));
    }

    #[test]
    fn inline_system() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"system":{"energies":[0.0,1.0],"dipole":[[0.0,1.0],[1.0,0.0]]},"from":0,"to":1,
                "uncertainty":{"parameters":[{"target":{"kind":"dipole","i":0,"j":1},"distribution":{"law":"point_mass","value":1.0,"relative":true}}]}}"#,
        )
        .unwrap();
        assert_eq!(c.system().unwrap().dimension(), 2);
    }
}
