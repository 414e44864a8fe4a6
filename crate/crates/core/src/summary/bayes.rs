use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_rng, ExecMode};
use crate::mcmc::partition;
use crate::model::{DriftSpec, ModelInstance, SigmaSpec};
use crate::path::make_grid;
use crate::survival::{loglik_values, Observation, ObservationIndex, SurvivalDataset};

/// Settings of the prior Monte Carlo marginal likelihood estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorMcSettings {
    pub n_samples: usize,
    /// Euler step of the simulated paths.
    pub dt: f64,
    pub seed: u64,
}

impl Default for PriorMcSettings {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            dt: 0.01,
            seed: 0,
        }
    }
}

/// Prior Monte Carlo estimate of a log marginal likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLikelihood {
    pub log_ml: f64,
    /// Delta-method standard error of `log_ml`.
    pub se: f64,
    /// Draws with nonzero likelihood.
    pub nonzero: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesFactor {
    /// Marginal likelihood of the first model over that of the second.
    pub bf: f64,
    pub log_bf: f64,
    /// Delta-method standard error of `log_bf`, including the covariance
    /// induced by the shared randomness streams.
    pub se_log_bf: f64,
    pub first: MarginalLikelihood,
    pub second: MarginalLikelihood,
}

struct SimCell {
    drift: DriftSpec,
    z: Vec<f64>,
    obs: ObservationIndex,
}

struct SimUnit {
    times: Vec<f64>,
    cells: Vec<SimCell>,
}

fn prepare(model: &ModelInstance, data: &SurvivalDataset, dt: f64) -> Result<Vec<SimUnit>> {
    model.validate()?;
    let mut units = Vec::new();
    for cells in partition(model, data)? {
        let times: Vec<f64> = cells.iter().flat_map(|c| c.2.iter().map(|o| o.0)).collect();
        if times.is_empty() {
            continue;
        }
        if let Some(t) = times.iter().find(|&&t| t <= model.origin) {
            return Err(Error::InvalidArgument(format!(
                "observation at {t} is not after the time origin {}",
                model.origin
            )));
        }
        let y_max = times.iter().copied().fold(f64::MIN, f64::max);
        let grid = make_grid(model.origin, y_max, dt, &times)?;
        let mut sim = Vec::with_capacity(cells.len());
        for (_, z, obs) in cells {
            let obs: Vec<Observation> = obs
                .iter()
                .map(|&(t, e)| if e { Observation::event(t) } else { Observation::censored(t) })
                .collect();
            sim.push(SimCell {
                drift: model.drift.with_covariates(&z),
                z,
                obs: ObservationIndex::build(&grid, &obs)?,
            });
        }
        units.push(SimUnit {
            times: grid.nodes().to_vec(),
            cells: sim,
        });
    }
    Ok(units)
}

/// Log-likelihood of the data under one prior draw of parameters and paths.
fn draw_loglik<R: Rng>(model: &ModelInstance, units: &[SimUnit], rng: &mut R, buf: &mut Vec<f64>) -> f64 {
    let theta = model.prior.sample(rng);
    let sigma = match model.sigma {
        SigmaSpec::Known(s) => s,
        SigmaSpec::Unknown { prior, .. } => prior.sample(rng),
    };
    let mut total = 0.0;
    let mut noise = Vec::new();
    for unit in units {
        let t = &unit.times;
        noise.clear();
        noise.extend((0..t.len() - 1).map(|k| (t[k + 1] - t[k]).sqrt() * rng.sample::<f64, _>(StandardNormal)));
        for cell in &unit.cells {
            buf.clear();
            buf.push(model.start_value(&cell.z, &theta));
            for k in 0..t.len() - 1 {
                let x = buf[k];
                let next = x + cell.drift.eval(x, &theta) * (t[k + 1] - t[k]) + sigma * noise[k];
                if !next.is_finite() {
                    return f64::NEG_INFINITY;
                }
                buf.push(next);
            }
            total += loglik_values(t, buf, model.hazard, &cell.obs);
        }
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

/// Per-draw log-likelihoods; draw `i` uses randomness stream `i`.
fn prior_logliks(model: &ModelInstance, data: &SurvivalDataset, s: &PriorMcSettings, mode: ExecMode) -> Result<Vec<f64>> {
    let units = prepare(model, data, s.dt)?;
    Ok(map_indexed(mode, s.n_samples, |i| {
        let mut rng = stream_rng(s.seed, i as u64);
        draw_loglik(model, &units, &mut rng, &mut Vec::new())
    }))
}

/// Scaled weights `exp(l_i - max)` and the log of the scale.
fn weights(logliks: &[f64]) -> (Vec<f64>, f64) {
    let m = logliks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (logliks.iter().map(|l| (l - m).exp()).collect(), m)
}

fn summarize(logliks: &[f64], name: &str) -> Result<(MarginalLikelihood, Vec<f64>)> {
    let n = logliks.len();
    let nonzero = logliks.iter().filter(|l| l.is_finite()).count();
    if nonzero == 0 {
        return Err(Error::EstimateFailed(format!(
            "model '{name}': all {n} prior draws give zero likelihood"
        )));
    }
    let (w, m) = weights(logliks);
    let mean = w.iter().sum::<f64>() / n as f64;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1).max(1) as f64;
    let rel: Vec<f64> = w.iter().map(|x| x / mean).collect();
    Ok((
        MarginalLikelihood {
            log_ml: m + mean.ln(),
            se: (var / n as f64).sqrt() / mean,
            nonzero,
            n_samples: n,
        },
        rel,
    ))
}

/// Prior Monte Carlo estimate of the log marginal likelihood of `model`.
pub fn marginal_likelihood_prior_mc(
    model: &ModelInstance,
    data: &SurvivalDataset,
    settings: &PriorMcSettings,
    mode: ExecMode,
) -> Result<MarginalLikelihood> {
    check(settings)?;
    let l = prior_logliks(model, data, settings, mode)?;
    Ok(summarize(&l, &model.name)?.0)
}

fn check(s: &PriorMcSettings) -> Result<()> {
    if s.n_samples < 2 {
        return Err(Error::InvalidArgument("at least two prior draws are needed".into()));
    }
    if !(s.dt > 0.0 && s.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid step {}", s.dt)));
    }
    Ok(())
}

/// Bayes factor of `first` against `second` from prior Monte Carlo
/// marginal likelihoods. Both models use the same randomness streams, so
/// identical models give a factor of exactly one.
pub fn bayes_factor_prior_mc(
    first: &ModelInstance,
    second: &ModelInstance,
    data: &SurvivalDataset,
    settings: &PriorMcSettings,
    mode: ExecMode,
) -> Result<BayesFactor> {
    check(settings)?;
    let l1 = prior_logliks(first, data, settings, mode)?;
    let l2 = prior_logliks(second, data, settings, mode)?;
    let (m1, r1) = summarize(&l1, &first.name)?;
    let (m2, r2) = summarize(&l2, &second.name)?;
    let n = settings.n_samples as f64;
    let cov = r1.iter().zip(&r2).map(|(a, b)| (a - 1.0) * (b - 1.0)).sum::<f64>() / (n - 1.0);
    let var = m1.se * m1.se + m2.se * m2.se - 2.0 * cov / n;
    let log_bf = m1.log_ml - m2.log_ml;
    Ok(BayesFactor {
        bf: log_bf.exp(),
        log_bf,
        se_log_bf: var.max(0.0).sqrt(),
        first: m1,
        second: m2,
    })
}
