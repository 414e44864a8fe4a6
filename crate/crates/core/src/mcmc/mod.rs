//! Hastings-within-Gibbs sampling of drift parameters and latent paths.

mod chain;
mod config;
mod conjugate;
mod mh;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use chain::{run_chain, run_chains, Block, Sampler};
pub(crate) use chain::partition;
pub use config::{Parametrization, SamplerConfig};
pub use conjugate::{conjugate_posterior, conjugate_theta_update, ConjugateConditional};
pub use mh::independence_update;

use crate::error::{Error, Result};
use crate::model::DriftSpec;
use crate::path::DiffusionPath;

/// Proposal and acceptance counts per update type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcceptanceStats {
    counts: BTreeMap<String, (u64, u64)>,
}

impl AcceptanceStats {
    pub(crate) fn register(&mut self, name: &str) {
        self.counts.entry(name.to_string()).or_insert((0, 0));
    }

    pub(crate) fn record(&mut self, name: &str, accepted: bool) {
        let e = self.counts.entry(name.to_string()).or_insert((0, 0));
        e.0 += 1;
        e.1 += accepted as u64;
    }

    /// `(proposed, accepted)` for an update, if it exists.
    pub fn counts(&self, name: &str) -> Option<(u64, u64)> {
        self.counts.get(name).copied()
    }

    /// Acceptance rate, `None` when nothing was proposed.
    pub fn rate(&self, name: &str) -> Option<f64> {
        match self.counts.get(name) {
            Some(&(n, a)) if n > 0 => Some(a as f64 / n as f64),
            _ => None,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }
}

/// Survival, hazard and density of one diffusion at the output times, one
/// row per retained iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDraws {
    pub label: String,
    pub times: Vec<f64>,
    pub survival: Vec<Vec<f64>>,
    pub hazard: Vec<Vec<f64>>,
    pub density: Vec<Vec<f64>>,
}

/// Retained draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub parameter_names: Vec<String>,
    pub theta: Vec<Vec<f64>>,
    /// Present when sigma is sampled.
    pub sigma: Option<Vec<f64>>,
    pub loglik: Vec<f64>,
    pub iterations: Vec<usize>,
    pub curves: Vec<CurveDraws>,
    pub acceptance: AcceptanceStats,
    pub seed: u64,
    pub chain: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Draws of parameter `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.theta.iter().map(|t| t[i]).collect()
    }

    /// Draws of the named parameter.
    pub fn parameter(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.parameter_names.iter().position(|n| n == name)?;
        Some(self.column(i))
    }

    pub fn curve(&self, label: &str) -> Option<&CurveDraws> {
        self.curves.iter().find(|c| c.label == label)
    }
}

/// Maps a latent object back to the diffusion path it represents.
///
/// `latent` lives on the full grid. Centered latents are the path. For the
/// partially non-centered form the values up to `y_max` are the path and the
/// values after it are a standard Brownian motion started at zero at
/// `y_max`. Non-centered latents are the driving Brownian motion, started at
/// `x0` by Euler steps.
pub fn reconstruct_path(
    parametrization: Parametrization,
    drift: &DriftSpec,
    theta: &[f64],
    sigma: f64,
    latent: &DiffusionPath,
    x0: f64,
    y_max: f64,
) -> Result<DiffusionPath> {
    let grid = Arc::clone(latent.grid());
    let times = grid.nodes();
    let w = latent.values();
    let (from, base) = match parametrization {
        Parametrization::Centered => return Ok(latent.clone()),
        Parametrization::Pnc => (grid.index_of(y_max)?, 0.0),
        Parametrization::Ncp => (0, w[0]),
    };
    let mut out = w.to_vec();
    if parametrization == Parametrization::Ncp {
        out[0] = x0;
    }
    let mut prev = if from == 0 { base } else { 0.0 };
    for k in from..times.len() - 1 {
        let b = drift.eval(out[k], theta);
        let next = out[k] + b * (times[k + 1] - times[k]) + sigma * (w[k + 1] - prev);
        if !next.is_finite() {
            return Err(Error::NonFiniteDrift { time: times[k], value: b });
        }
        prev = w[k + 1];
        out[k + 1] = next;
    }
    DiffusionPath::new(grid, out)
}
