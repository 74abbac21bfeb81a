//! Pathway-resolved propagation and robust control of small driven quantum
//! systems `H(t) = H0 - mu eps(t)`.
//!
//! * [`propagator`]: split-step propagation, objectives, Dyson terms, landscapes.
//! * [`pathways`]: phase encoding of parameters and pathway decoding.
//! * [`moments`]: asymptotic and Monte-Carlo moments of transition probabilities.
//! * [`pmp`]: terminal gradients, time-resolved nominal and expected gradients.
//! * [`optimizers`]: tGA, ACROMUSE and NSGA-II over the frequency/phase genome.

pub mod error;
pub mod field;
pub mod linalg;
pub mod optimizers;
pub mod moments;
pub mod pmp;
pub mod pathways;
pub mod propagator;
pub mod system;
pub mod uncertainty;

pub use error::{Error, Result};
pub use field::{Chromosome, ControlField, FieldBounds, Mode};
pub use system::{builtin_system, example_system, QuantumSystem};
pub use uncertainty::{ParameterDistribution, ParameterTarget, UncertainParameter};
