use std::sync::Arc;

use super::{Grouping, ModelInstance};
use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::path::{euler_maruyama_simulate, make_grid, sample_noise, DiffusionPath};
use crate::survival::{sample_event_time, EventDraw, Observation, SurvivalDataset};

/// Layout of a synthetic study.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDesign {
    /// Subjects per diffusion (per group or covariate cell).
    pub n: usize,
    /// Common censoring time.
    pub cutoff: f64,
    /// Euler step of the latent paths.
    pub dt: f64,
    /// Group labels for grouped models.
    pub groups: Vec<String>,
}

/// Synthetic data together with the latent paths that generated it.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub data: SurvivalDataset,
    /// One path per group or covariate cell.
    pub paths: Vec<(String, DiffusionPath)>,
}

/// Simulates one latent path per diffusion of `model` and `n` independent
/// event times from each, censored at the cutoff. Covariate cells share the
/// driving noise. Paths come from randomness stream 0 of `seed`, event times
/// from stream 1.
pub fn simulate_dataset(
    model: &ModelInstance,
    theta: &[f64],
    sigma: f64,
    design: &SimulationDesign,
    seed: u64,
) -> Result<SimulatedData> {
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: theta.len(),
        });
    }
    if design.n == 0 || !(design.cutoff > model.origin) {
        return Err(Error::InvalidArgument("simulation needs n >= 1 and a cutoff after the origin".into()));
    }
    let grid = Arc::new(make_grid(model.origin, design.cutoff, design.dt, &[])?);
    let mut path_rng = stream_rng(seed, 0);
    let mut event_rng = stream_rng(seed, 1);
    let cells: Vec<(Option<String>, Vec<f64>)> = match &model.grouping {
        Grouping::Pooled => vec![(None, Vec::new())],
        Grouping::ByGroup => {
            if design.groups.is_empty() {
                return Err(Error::InvalidArgument("grouped simulation needs group labels".into()));
            }
            design.groups.iter().map(|g| (Some(g.clone()), Vec::new())).collect()
        }
        Grouping::Covariates(spec) => spec.cells.iter().map(|z| (None, z.clone())).collect(),
    };
    let shared = matches!(model.grouping, Grouping::Covariates(_));
    let mut noise = sample_noise(&grid, &mut path_rng);
    let mut obs = Vec::new();
    let mut paths = Vec::new();
    for (i, (group, z)) in cells.iter().enumerate() {
        if i > 0 && !shared {
            noise = sample_noise(&grid, &mut path_rng);
        }
        let drift = model.drift.with_covariates(z);
        let x0 = model.start_value(z, theta);
        let path = euler_maruyama_simulate(&drift, theta, sigma, x0, &grid, &noise)?;
        for _ in 0..design.n {
            let o = match sample_event_time(&path, model.hazard, design.cutoff, &mut event_rng)? {
                EventDraw::Event(t) => Observation::event(t),
                EventDraw::Censored(t) => Observation::censored(t),
            };
            let o = o.with_covariates(z.clone());
            obs.push(match group {
                Some(g) => o.in_group(g),
                None => o,
            });
        }
        let label = match (&model.grouping, group) {
            (Grouping::Covariates(spec), _) => spec
                .names
                .iter()
                .zip(z)
                .map(|(n, v)| format!("{n}={v}"))
                .collect::<Vec<_>>()
                .join(","),
            (_, Some(g)) => g.clone(),
            _ => "all".into(),
        };
        paths.push((label, path));
    }
    let names = match &model.grouping {
        Grouping::Covariates(spec) => spec.names.clone(),
        _ => Vec::new(),
    };
    Ok(SimulatedData {
        data: SurvivalDataset::with_covariates(obs, names, "")?,
        paths,
    })
}
