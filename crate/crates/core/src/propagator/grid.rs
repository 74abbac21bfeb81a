use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Target step used when a grid is derived from a duration alone.
pub const DEFAULT_DT: f64 = 0.08;

/// Uniform time grid on `[0, T]` with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n_steps: usize,
    pub duration: f64,
}

impl TimeGrid {
    pub fn new(n_steps: usize, duration: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(validation("time grid needs at least one step"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(validation("time grid duration must be positive"));
        }
        Ok(Self { n_steps, duration })
    }

    /// Grid with step close to `dt`.
    pub fn with_step(duration: f64, dt: f64) -> Result<Self> {
        let n = (duration / dt).ceil().max(1.0) as usize;
        Self::new(n, duration)
    }

    /// Default grid for a duration: `dt ~ 0.08`, i.e. 500 steps for `T = 40`.
    pub fn for_duration(duration: f64) -> Self {
        Self::with_step(duration, DEFAULT_DT).expect("positive duration")
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.n_steps as f64
    }

    /// Grid points `t_q = q dt`, `q = 0..=n_steps`.
    pub fn points(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps).map(|q| q as f64 * dt).collect()
    }

    /// Bin centers `(q + 1/2) dt`, `q = 0..n_steps`.
    pub fn bin_centers(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_steps).map(|q| (q as f64 + 0.5) * dt).collect()
    }

    /// Same duration, half the step.
    pub fn refined(&self) -> Self {
        Self { n_steps: 2 * self.n_steps, duration: self.duration }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_for_forty() {
        let g = TimeGrid::for_duration(40.0);
        assert_eq!(g.n_steps, 500);
        assert!((g.dt() - 0.08).abs() < 1e-15);
        assert_eq!(g.points().len(), 501);
        assert_eq!(*g.points().last().unwrap(), 40.0);
    }

    #[test]
    fn rejects_empty() {
        assert!(TimeGrid::new(0, 1.0).is_err());
        assert!(TimeGrid::new(3, -1.0).is_err());
    }
}
