//! The cell problem `H̄(p) = inf_u sup_q H(q, p + du(q))` and its two oracles.

mod certificate;
mod effective;
mod lax_oleinik;
mod minimax;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};
use crate::grid::{DiffScheme, PeriodicField, TorusGrid};

pub use certificate::{subsolution_certificate, supersolution_certificate};
pub use effective::{
    effective_on_grid, AxisLabel, EffectiveConfig, EffectiveHamiltonian, Method, SampleGrid, SampledFunction,
};
pub use lax_oleinik::{homogenize_laxoleinik, LaxOleinikConfig, LaxOleinikResult};
pub use minimax::{homogenize_minimax, homogenize_minimax_from, MinimaxResult};
pub use quadrature::{flat_part_1d, homogenize_1d_quadrature, FlatPart};

/// Settings of the smoothed minimax solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// First softmax temperature `β_0`.
    pub beta0: f64,
    /// Ratio between consecutive temperatures.
    pub growth: f64,
    pub stages: usize,
    /// L-BFGS history length.
    pub memory: usize,
    pub max_iter: usize,
    /// Largest accepted certification gap `upper - lower`.
    pub tol: f64,
    /// Points per axis of the corrector grid; `0` picks 128 in 1D and 32 in 2D.
    pub grid_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta0: 10.0,
            growth: 4.0,
            stages: 6,
            memory: 12,
            max_iter: 400,
            tol: 1e-3,
            grid_points: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(HomogError::InvalidConfig(format!("beta0 = {}", self.beta0)));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(HomogError::InvalidConfig(format!(
                "temperatures must increase, growth = {}",
                self.growth
            )));
        }
        if self.stages == 0 || self.max_iter == 0 || self.memory == 0 {
            return Err(HomogError::InvalidConfig(
                "stages, max_iter and memory must be positive".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(HomogError::InvalidConfig(format!("tol = {}", self.tol)));
        }
        Ok(())
    }

    /// The temperature schedule `β_0 · growth^k`.
    pub fn temperatures(&self) -> Vec<f64> {
        (0..self.stages)
            .map(|k| self.beta0 * self.growth.powi(k as i32))
            .collect()
    }

    pub fn grid(&self, n: usize) -> Result<TorusGrid> {
        let points = match self.grid_points {
            0 if n == 1 => 128,
            0 => 32,
            m => m,
        };
        TorusGrid::new(n, points)
    }
}

/// A mean-zero periodic corrector `u` together with its discrete differential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorField {
    pub u: PeriodicField,
    pub scheme: DiffScheme,
    /// `du[a][i]`: derivative along axis `a` at node `i`.
    pub du: Vec<Vec<f64>>,
}

impl CorrectorField {
    /// Centers `u` and differentiates it with `scheme`.
    pub fn new(u: PeriodicField, scheme: DiffScheme) -> Self {
        let u = u.centered();
        let du = (0..u.grid().dim()).map(|a| u.derivative(a, scheme)).collect();
        CorrectorField { u, scheme, du }
    }

    pub fn zero(grid: TorusGrid) -> Self {
        CorrectorField::new(PeriodicField::constant(grid, 0.0).expect("finite"), DiffScheme::Forward)
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u.grid()
    }

    /// `p + du(q_i)` at node `i`.
    pub fn momentum(&self, p: &[f64], i: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (a, o) in out.iter_mut().enumerate().take(p.len()) {
            *o = p[a] + self.du[a][i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule() {
        let c = SolverConfig::default();
        let t = c.temperatures();
        assert_eq!(t.first(), Some(&10.0));
        assert_eq!(t.last(), Some(&10240.0));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_config() {
        let c = SolverConfig {
            growth: 1.0,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn corrector_is_centered() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u = PeriodicField::from_fn(g, |q| 3.0 + q[0]).unwrap();
        let c = CorrectorField::new(u, DiffScheme::Forward);
        assert!(c.u.mean().abs() < 1e-12);
    }
}
