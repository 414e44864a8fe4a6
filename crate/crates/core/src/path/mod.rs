//! Time grids, Brownian motion and bridges, Euler–Maruyama simulation,
//! discretized Girsanov densities and the unit-diffusion transform.
//!
//! Stochastic integrals use the left-endpoint (Itô) convention throughout,
//! so the Girsanov log-density of a path is exactly the log-ratio of the
//! Euler–Maruyama transition densities to the Gaussian random-walk
//! densities on the same grid.

mod euler;
mod girsanov;
mod grid;
mod lamperti;
mod sample;

use std::sync::Arc;

pub use euler::euler_maruyama_simulate;
pub use girsanov::girsanov_logdensity;
pub use grid::{make_grid, TimeGrid};
pub use lamperti::{lamperti_transform, DiffusionCoefficient, LampertiTransform};
pub use sample::{sample_brownian_bridge, sample_brownian_path, sample_noise};

pub(crate) use girsanov::girsanov_range;
pub(crate) use sample::{fill_bridge, fill_brownian};

use crate::error::{Error, Result};

/// A sample path evaluated at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionPath {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl DiffusionPath {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at the node equal to `t`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.index_of(t)?])
    }

    /// `x(t) - x(s)` for grid nodes `s` and `t`.
    pub fn increment(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.value_at(t)? - self.value_at(s)?)
    }
}

/// Brownian increments, one per grid interval. Under the standard law the
/// increment over interval `k` is `N(0, dt_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrements {
    grid: Arc<TimeGrid>,
    increments: Vec<f64>,
}

impl NoiseIncrements {
    pub fn new(grid: Arc<TimeGrid>, increments: Vec<f64>) -> Result<Self> {
        if increments.len() + 1 != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len() - 1,
                found: increments.len(),
            });
        }
        Ok(Self { grid, increments })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// The Brownian path obtained by cumulating the increments from 0.
    pub fn to_path(&self) -> DiffusionPath {
        let mut values = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        values.push(acc);
        for dw in &self.increments {
            acc += dw;
            values.push(acc);
        }
        DiffusionPath {
            grid: Arc::clone(&self.grid),
            values,
        }
    }
}
