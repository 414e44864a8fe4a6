use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::conjugate::{accumulate, finish};
use super::mh::{accept, independence_decision, random_walk_proposal};
use super::{AcceptanceStats, CurveDraws, Parametrization, SamplerConfig, Trace};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_rng, ExecMode};
use crate::model::{DriftSpec, Grouping, ModelInstance, ParamUpdate, SigmaSpec};
use crate::path::{fill_bridge, fill_brownian, girsanov_range, make_grid, DiffusionPath, TimeGrid};
use crate::survival::{curve_triplet, loglik_delta, loglik_values, HazardSpec, ObservationIndex, SurvivalDataset};

/// What the head of a unit's latent vector stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Latent {
    /// The diffusion path itself.
    Path,
    /// `(X - x0) / sigma`, used when sigma is sampled.
    Scaled,
    /// The driving standard Brownian motion.
    Noise,
}

/// Block of head nodes `[a, b]` updated together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    /// Free right end point (Brownian proposal instead of a bridge).
    pub free: bool,
}

/// One diffusion: a covariate cell or a group.
#[derive(Debug, Clone)]
struct Cell {
    label: String,
    z: Vec<f64>,
    drift: DriftSpec,
    obs: ObservationIndex,
    x0: f64,
    path: Vec<f64>,
}

/// Latent object shared by one or more cells, on one grid.
#[derive(Debug, Clone)]
struct Unit {
    grid: Arc<TimeGrid>,
    /// Last node of the head; the head is updated by blocks, the tail is
    /// refreshed from its prior.
    split: usize,
    head: Vec<f64>,
    /// Standard Brownian increments over the intervals after `split`.
    tail: Vec<f64>,
    blocks: Vec<Block>,
    cells: Vec<Cell>,
    output: Vec<usize>,
    tail_stale: bool,
}

/// Block knots every `length` from `t0` up to the node `end`, snapped to the
/// grid; interior blocks `[k_i, k_{i+2}]` for `i = 1..m-3` and a free final
/// block `[k_{m-2}, k_m]`. Fewer than four knots give one free block.
fn make_blocks(grid: &TimeGrid, end: usize, length: f64) -> Vec<Block> {
    if end == 0 {
        return Vec::new();
    }
    let nodes = grid.nodes();
    let (t0, t_end) = (nodes[0], nodes[end]);
    let mut knots = vec![0usize];
    let mut k = 1;
    loop {
        let t = t0 + k as f64 * length;
        if t >= t_end - 1e-9 * length {
            break;
        }
        let idx = grid.nearest_index(t);
        if idx > *knots.last().expect("nonempty") && idx < end {
            knots.push(idx);
        }
        k += 1;
    }
    knots.push(end);
    let m = knots.len();
    if m < 4 {
        return vec![Block {
            start: 0,
            end,
            free: true,
        }];
    }
    let mut blocks: Vec<Block> = (0..m - 3)
        .map(|i| Block {
            start: knots[i],
            end: knots[i + 2],
            free: false,
        })
        .collect();
    blocks.push(Block {
        start: knots[m - 3],
        end,
        free: true,
    });
    blocks
}

/// Output node indices closest to an even spread over the grid.
fn output_nodes(grid: &TimeGrid, n: usize) -> Vec<usize> {
    let (a, b) = (grid.start(), grid.end());
    let mut idx: Vec<usize> = (0..n)
        .map(|j| grid.nearest_index(a + (b - a) * j as f64 / (n - 1) as f64))
        .collect();
    idx.dedup();
    idx
}

/// Hastings-within-Gibbs sampler for one chain.
pub struct Sampler {
    model: ModelInstance,
    config: SamplerConfig,
    hazard: HazardSpec,
    latent: Latent,
    units: Vec<Unit>,
    theta: Vec<f64>,
    sigma: f64,
    conjugate: Vec<usize>,
    rng: ChaCha8Rng,
    tail_rng: ChaCha8Rng,
    stats: AcceptanceStats,
    scratch: Vec<f64>,
    scratch_paths: Vec<Vec<f64>>,
    iteration: usize,
    chain: usize,
}

const CONJ: &str = "theta:conjugate";
const SIGMA: &str = "sigma";
const BRIDGE: &str = "path:bridge";
const FREE: &str = "path:free";

impl Sampler {
    /// Builds the chain state for `model` on `data`. Chain `c` draws from
    /// randomness streams `2c` (parameters and head) and `2c + 1` (tails).
    pub fn new(model: &ModelInstance, data: &SurvivalDataset, config: &SamplerConfig, chain: usize) -> Result<Self> {
        config.validate()?;
        model.validate()?;
        if model.explosive {
            return Err(Error::InvalidSampler(format!(
                "model '{}' has explosive paths and cannot be used for inference",
                model.name
            )));
        }
        let param = config.parametrization;
        let latent = match (param, model.sigma.is_unknown()) {
            (Parametrization::Ncp, _) => Latent::Noise,
            (Parametrization::Centered, true) => Latent::Scaled,
            (Parametrization::Centered, false) | (Parametrization::Pnc, false) => Latent::Path,
            (Parametrization::Pnc, true) => {
                return Err(Error::InvalidSampler(
                    "unknown sigma is supported with the centered and non-centered parametrizations".into(),
                ))
            }
        };
        let covariate = matches!(model.grouping, Grouping::Covariates(_));
        if latent != Latent::Noise && (covariate || model.start_depends_on_theta()) {
            return Err(Error::InvalidSampler(
                "covariate models need the non-centered parametrization".into(),
            ));
        }
        let theta = match &config.initial_theta {
            Some(t) => t.clone(),
            None => model.prior.mean(),
        };
        if theta.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: theta.len(),
            });
        }
        if !model.prior.log_density(&theta)?.is_finite() {
            return Err(Error::InvalidSampler("initial parameters outside the prior support".into()));
        }
        let conjugate = if latent == Latent::Noise {
            Vec::new()
        } else {
            model.conjugate_block()
        };

        let groups = partition(model, data)?;
        let max_time = data
            .observations()
            .iter()
            .map(|o| o.time)
            .fold(model.origin, f64::max);
        let horizon = config.horizon.unwrap_or(max_time);
        if horizon <= model.origin {
            return Err(Error::InvalidSampler(format!(
                "horizon {horizon} must exceed the time origin {}",
                model.origin
            )));
        }
        let mut rng = stream_rng(config.seed, 2 * chain as u64);
        let mut tail_rng = stream_rng(config.seed, 2 * chain as u64 + 1);
        let sigma = model.sigma.initial();

        let mut units = Vec::with_capacity(groups.len());
        for cells in groups {
            let times: Vec<f64> = cells.iter().flat_map(|(_, _, obs)| obs.iter().copied()).map(|(t, _)| t).collect();
            let y_max = times.iter().copied().fold(model.origin, f64::max);
            if y_max > horizon * (1.0 + 1e-12) {
                return Err(Error::InvalidSampler(format!(
                    "horizon {horizon} is before the last observation {y_max}"
                )));
            }
            if let Some(t) = times.iter().find(|&&t| t <= model.origin) {
                return Err(Error::InvalidSampler(format!(
                    "observation at {t} is not after the time origin {}",
                    model.origin
                )));
            }
            let head_end = if param == Parametrization::Centered { horizon } else { y_max };
            let mut extra = times.clone();
            let mut k = 1;
            while model.origin + k as f64 * config.block_length < head_end {
                extra.push(model.origin + k as f64 * config.block_length);
                k += 1;
            }
            let grid = make_grid(model.origin, horizon, config.dt, &extra)?.shared();
            let split = grid.index_of(head_end)?;
            let blocks = make_blocks(&grid, split, config.block_length);
            let mut built = Vec::with_capacity(cells.len());
            for (label, z, obs) in cells {
                let obs: Vec<crate::survival::Observation> = obs
                    .iter()
                    .map(|&(t, e)| {
                        if e {
                            crate::survival::Observation::event(t)
                        } else {
                            crate::survival::Observation::censored(t)
                        }
                    })
                    .collect();
                let x0 = model.start_value(&z, &theta);
                built.push(Cell {
                    label,
                    drift: model.drift.with_covariates(&z),
                    z,
                    obs: ObservationIndex::build(&grid, &obs)?,
                    x0,
                    path: vec![x0; grid.len()],
                });
            }
            let mut head = vec![0.0; split + 1];
            let (origin, scale) = match latent {
                Latent::Path => (built[0].x0, sigma),
                Latent::Scaled | Latent::Noise => (0.0, 1.0),
            };
            head[0] = origin;
            fill_brownian(&grid.nodes()[..=split], &mut head, scale, &mut rng);
            let tail = (split..grid.len() - 1)
                .map(|k| grid.step(k).sqrt() * tail_rng.sample::<f64, _>(StandardNormal))
                .collect();
            let output = output_nodes(&grid, config.output_nodes);
            units.push(Unit {
                grid,
                split,
                head,
                tail,
                blocks,
                cells: built,
                output,
                tail_stale: true,
            });
        }

        let mut stats = AcceptanceStats::default();
        if !conjugate.is_empty() {
            stats.register(CONJ);
        }
        for (i, u) in model.updates.iter().enumerate() {
            if !(conjugate.contains(&i) && *u == ParamUpdate::Conjugate) {
                stats.register(&format!("theta:{}", model.drift.names()[i]));
            }
        }
        if model.sigma.is_unknown() {
            stats.register(SIGMA);
        }
        stats.register(BRIDGE);
        stats.register(FREE);

        let max_len = units.iter().map(|u| u.grid.len()).max().unwrap_or(0);
        let max_cells = units.iter().map(|u| u.cells.len()).max().unwrap_or(0);
        let mut sampler = Self {
            hazard: model.hazard,
            model: model.clone(),
            config: config.clone(),
            latent,
            units,
            theta,
            sigma,
            conjugate,
            rng,
            tail_rng,
            stats,
            scratch: vec![0.0; max_len],
            scratch_paths: vec![vec![0.0; max_len]; max_cells],
            iteration: 0,
            chain,
        };
        for u in 0..sampler.units.len() {
            sampler.rebuild_unit(u)?;
        }
        Ok(sampler)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn stats(&self) -> &AcceptanceStats {
        &self.stats
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn blocks(&self, unit: usize) -> &[Block] {
        &self.units[unit].blocks
    }

    pub fn grid(&self, unit: usize) -> &Arc<TimeGrid> {
        &self.units[unit].grid
    }

    /// Latent values on the head of `unit`: the path (centered and partially
    /// non-centered), the scaled path (sampled sigma) or the Brownian motion
    /// (non-centered).
    pub fn latent_head(&self, unit: usize) -> &[f64] {
        &self.units[unit].head
    }

    /// Reconstructed diffusion paths of every cell of every unit, with labels.
    pub fn paths(&mut self) -> Result<Vec<(String, DiffusionPath)>> {
        self.refresh_tails()?;
        let mut out = Vec::new();
        for u in &self.units {
            for c in &u.cells {
                out.push((c.label.clone(), DiffusionPath::new(Arc::clone(&u.grid), c.path.clone())?));
            }
        }
        Ok(out)
    }

    /// Total log-likelihood of the data under the current paths.
    pub fn log_likelihood(&self) -> f64 {
        self.units
            .iter()
            .flat_map(|u| u.cells.iter().map(move |c| loglik_values(u.grid.nodes(), &c.path, self.hazard, &c.obs)))
            .sum()
    }

    fn x0_of(&self, u: usize, c: usize, theta: &[f64]) -> f64 {
        self.model.start_value(&self.units[u].cells[c].z, theta)
    }

    /// Writes the head portion `from..=to` of a cell path given the latent
    /// head, parameters and sigma.
    #[allow(clippy::too_many_arguments)]
    fn fill_head(
        latent: Latent,
        times: &[f64],
        head: &[f64],
        drift: &DriftSpec,
        theta: &[f64],
        sigma: f64,
        x0: f64,
        out: &mut [f64],
        from: usize,
        to: usize,
    ) -> Result<()> {
        match latent {
            Latent::Path => out[from..=to].copy_from_slice(&head[from..=to]),
            Latent::Scaled => {
                for k in from..=to {
                    out[k] = x0 + sigma * head[k];
                }
            }
            Latent::Noise => {
                if from == 0 {
                    out[0] = x0;
                }
                for k in from..to {
                    let b = drift.eval(out[k], theta);
                    let next = out[k] + b * (times[k + 1] - times[k]) + sigma * (head[k + 1] - head[k]);
                    if !next.is_finite() {
                        return Err(Error::NonFiniteDrift { time: times[k], value: b });
                    }
                    out[k + 1] = next;
                }
            }
        }
        Ok(())
    }

    fn fill_tail(times: &[f64], tail: &[f64], split: usize, drift: &DriftSpec, theta: &[f64], sigma: f64, out: &mut [f64]) -> Result<()> {
        for k in split..out.len() - 1 {
            let b = drift.eval(out[k], theta);
            let next = out[k] + b * (times[k + 1] - times[k]) + sigma * tail[k - split];
            if !next.is_finite() {
                return Err(Error::NonFiniteDrift { time: times[k], value: b });
            }
            out[k + 1] = next;
        }
        Ok(())
    }

    fn rebuild_unit(&mut self, u: usize) -> Result<()> {
        let theta = self.theta.clone();
        for c in 0..self.units[u].cells.len() {
            let x0 = self.x0_of(u, c, &theta);
            let unit = &mut self.units[u];
            let cell = &mut unit.cells[c];
            cell.x0 = x0;
            Self::fill_head(self.latent, unit.grid.nodes(), &unit.head, &cell.drift, &theta, self.sigma, x0, &mut cell.path, 0, unit.split)?;
        }
        self.units[u].tail_stale = true;
        self.refresh_unit_tail(u)
    }

    fn refresh_unit_tail(&mut self, u: usize) -> Result<()> {
        let unit = &mut self.units[u];
        if !unit.tail_stale {
            return Ok(());
        }
        for cell in &mut unit.cells {
            Self::fill_tail(unit.grid.nodes(), &unit.tail, unit.split, &cell.drift, &self.theta, self.sigma, &mut cell.path)?;
        }
        unit.tail_stale = false;
        Ok(())
    }

    fn refresh_tails(&mut self) -> Result<()> {
        for u in 0..self.units.len() {
            self.refresh_unit_tail(u)?;
        }
        Ok(())
    }

    /// Girsanov log-density of all cell heads.
    fn head_girsanov(&self, theta: &[f64], sigma: f64, paths: Option<&[Vec<f64>]>) -> f64 {
        let mut total = 0.0;
        for unit in &self.units {
            for (c, cell) in unit.cells.iter().enumerate() {
                let values = paths.map_or(&cell.path[..], |p| &p[c][..]);
                total += girsanov_range(unit.grid.nodes(), values, &cell.drift, theta, sigma, 0, unit.split);
            }
        }
        total
    }

    /// Log of the parameter-dependent part of the posterior, excluding the
    /// prior: the head Girsanov density for path latents, the likelihood of
    /// the reconstructed paths for Brownian latents.
    fn conditional_target(&mut self, theta: &[f64], sigma: f64) -> f64 {
        match self.latent {
            Latent::Path => self.head_girsanov(theta, sigma, None),
            Latent::Scaled | Latent::Noise => {
                let mut total = 0.0;
                for u in 0..self.units.len() {
                    for c in 0..self.units[u].cells.len() {
                        let x0 = self.x0_of(u, c, theta);
                        let unit = &self.units[u];
                        let cell = &unit.cells[c];
                        let out = &mut self.scratch;
                        if Self::fill_head(self.latent, unit.grid.nodes(), &unit.head, &cell.drift, theta, sigma, x0, out, 0, unit.split).is_err() {
                            return f64::NEG_INFINITY;
                        }
                        let values = &out[..unit.grid.len()];
                        if self.latent == Latent::Scaled {
                            total += girsanov_range(unit.grid.nodes(), values, &cell.drift, theta, sigma, 0, unit.split);
                        }
                        total += loglik_values(unit.grid.nodes(), values, self.hazard, &cell.obs);
                    }
                }
                total
            }
        }
    }

    /// Recomputes the head paths for new parameters or sigma.
    fn commit_parameters(&mut self) -> Result<()> {
        if self.latent == Latent::Path {
            for u in &mut self.units {
                u.tail_stale = true;
            }
            return Ok(());
        }
        for u in 0..self.units.len() {
            self.rebuild_unit(u)?;
        }
        Ok(())
    }

    fn conjugate_update(&mut self) -> Result<()> {
        let k = self.conjugate.len();
        let mut s = DVector::zeros(k);
        let mut l = DMatrix::zeros(k, k);
        for unit in &self.units {
            for cell in &unit.cells {
                accumulate(&cell.drift, &self.theta, &self.conjugate, unit.grid.nodes(), &cell.path, unit.split, &mut s, &mut l)?;
            }
        }
        let post = finish(s, l, self.sigma, &self.model.prior, &self.conjugate)?;
        let draw = post.sample(&mut self.rng);
        for (p, &i) in self.conjugate.iter().enumerate() {
            self.theta[i] = draw[p];
        }
        self.stats.record(CONJ, true);
        self.commit_parameters()
    }

    fn param_update(&mut self, i: usize) -> Result<()> {
        let update = match self.model.updates[i] {
            ParamUpdate::Conjugate if self.conjugate.contains(&i) => return Ok(()),
            ParamUpdate::Conjugate => ParamUpdate::PriorIndependence,
            other => other,
        };
        let name = format!("theta:{}", self.model.drift.names()[i]);
        let current = self.theta[i];
        let prior = &self.model.prior;
        let (cand, q_cur, q_cand) = match update {
            ParamUpdate::RandomWalk { step } => (random_walk_proposal(current, step, &mut self.rng), 0.0, 0.0),
            ParamUpdate::Independence(q) => {
                let q_cur = q.logpdf(current);
                if q_cur == f64::NEG_INFINITY {
                    return Err(Error::InvalidSampler(format!("proposal for '{name}' has zero density at {current}")));
                }
                let c = q.sample(&mut self.rng);
                (c, q_cur, q.logpdf(c))
            }
            ParamUpdate::PriorIndependence => match prior.marginal(i) {
                Some(q) => {
                    let c = q.sample(&mut self.rng);
                    (c, q.logpdf(current), q.logpdf(c))
                }
                None => {
                    let c = prior.sample(&mut self.rng)[i];
                    let mut th = self.theta.clone();
                    let q_cur = prior.log_conditional(&th, i);
                    th[i] = c;
                    (c, q_cur, prior.log_conditional(&th, i))
                }
            },
            ParamUpdate::Conjugate => unreachable!("handled above"),
        };
        let mut prop = self.theta.clone();
        prop[i] = cand;
        let lp_cur = self.model.prior.log_conditional(&self.theta, i);
        let lp_prop = self.model.prior.log_conditional(&prop, i);
        let sigma = self.sigma;
        let log_ratio = if lp_prop == f64::NEG_INFINITY || cand == current {
            f64::NEG_INFINITY
        } else {
            let theta = self.theta.clone();
            let t_prop = self.conditional_target(&prop, sigma);
            let t_cur = self.conditional_target(&theta, sigma);
            (lp_prop + t_prop) - (lp_cur + t_cur)
        };
        let (value, ok) = independence_decision(current, cand, q_cur, q_cand, |_| log_ratio, &mut self.rng)?;
        self.stats.record(&name, ok);
        if ok && value != current {
            self.theta[i] = value;
            self.commit_parameters()?;
        }
        Ok(())
    }

    fn sigma_update(&mut self) -> Result<()> {
        let SigmaSpec::Unknown { prior, .. } = self.model.sigma else {
            return Err(Error::InvalidSampler("sigma is fixed for this model".into()));
        };
        let cur = self.sigma;
        let prop = cur * (self.config.sigma_step * self.rng.sample::<f64, _>(StandardNormal)).exp();
        let lp = prior.logpdf(prop);
        let ratio = if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            let theta = self.theta.clone();
            let t_prop = self.conditional_target(&theta, prop);
            let t_cur = self.conditional_target(&theta, cur);
            lp - prior.logpdf(cur) + t_prop - t_cur + prop.ln() - cur.ln()
        };
        let ok = accept(ratio, &mut self.rng);
        self.stats.record(SIGMA, ok);
        if ok {
            self.sigma = prop;
            self.commit_parameters()?;
        }
        Ok(())
    }

    /// Log acceptance ratio for replacing the head values on `block` by
    /// `proposal` (values at nodes `block.start..=block.end`). Proposals
    /// come from the sigma-scaled Brownian law for path latents and the
    /// standard law otherwise, so only the Girsanov and likelihood factors
    /// remain.
    pub fn block_log_ratio(&mut self, unit: usize, block: Block, proposal: &[f64]) -> Result<f64> {
        let (a, b) = (block.start, block.end);
        if proposal.len() != b - a + 1 {
            return Err(Error::DimensionMismatch {
                expected: b - a + 1,
                found: proposal.len(),
            });
        }
        if b > self.units[unit].split || a >= b {
            return Err(Error::InvalidArgument(format!("block [{a}, {b}] is not inside the head")));
        }
        let to = if self.latent == Latent::Noise { self.units[unit].split } else { b };
        let n_cells = self.units[unit].cells.len();
        let theta = &self.theta;
        let u = &self.units[unit];
        let times = u.grid.nodes();
        let mut head = std::mem::take(&mut self.scratch);
        head[..=u.split].copy_from_slice(&u.head);
        head[a..=b].copy_from_slice(proposal);
        let mut ratio = 0.0;
        for c in 0..n_cells {
            let cell = &u.cells[c];
            let new = &mut self.scratch_paths[c];
            new[..cell.path.len()].copy_from_slice(&cell.path);
            if Self::fill_head(self.latent, times, &head, &cell.drift, theta, self.sigma, cell.x0, new, a, to).is_err() {
                self.scratch = head;
                return Ok(f64::NEG_INFINITY);
            }
            let new = &new[..cell.path.len()];
            if self.latent != Latent::Noise {
                ratio += girsanov_range(times, new, &cell.drift, theta, self.sigma, a, b)
                    - girsanov_range(times, &cell.path, &cell.drift, theta, self.sigma, a, b);
            }
            ratio += loglik_delta(times, &cell.path, new, a, to, self.hazard, &cell.obs);
        }
        self.scratch = head;
        Ok(ratio)
    }

    fn propose_block(&mut self, unit: usize, block: Block) -> Vec<f64> {
        let u = &self.units[unit];
        let times = &u.grid.nodes()[block.start..=block.end];
        let scale = if self.latent == Latent::Path { self.sigma } else { 1.0 };
        let mut prop = u.head[block.start..=block.end].to_vec();
        if block.free {
            fill_brownian(times, &mut prop, scale, &mut self.rng);
        } else {
            fill_bridge(times, &mut prop, scale, &mut self.rng);
        }
        prop
    }

    /// One Metropolis–Hastings update of the head on `block`.
    pub fn block_path_update(&mut self, unit: usize, block: Block) -> Result<bool> {
        let prop = self.propose_block(unit, block);
        let ratio = self.block_log_ratio(unit, block, &prop)?;
        let ok = accept(ratio, &mut self.rng);
        self.stats.record(if block.free { FREE } else { BRIDGE }, ok);
        if ok {
            let (a, b) = (block.start, block.end);
            let to = if self.latent == Latent::Noise { self.units[unit].split } else { b };
            let theta = self.theta.clone();
            let sigma = self.sigma;
            let u = &mut self.units[unit];
            u.head[a..=b].copy_from_slice(&prop);
            for cell in &mut u.cells {
                Self::fill_head(self.latent, u.grid.nodes(), &u.head, &cell.drift, &theta, sigma, cell.x0, &mut cell.path, a, to)?;
            }
            u.tail_stale = true;
        }
        Ok(ok)
    }

    /// Updates every block of `unit` in order and refreshes its tail.
    pub fn sweep_blocks(&mut self, unit: usize) -> Result<()> {
        for i in 0..self.units[unit].blocks.len() {
            let block = self.units[unit].blocks[i];
            self.block_path_update(unit, block)?;
        }
        let u = &mut self.units[unit];
        if !u.tail.is_empty() {
            for (k, inc) in u.tail.iter_mut().enumerate() {
                let dt = u.grid.step(u.split + k);
                *inc = dt.sqrt() * self.tail_rng.sample::<f64, _>(StandardNormal);
            }
            u.tail_stale = true;
        }
        Ok(())
    }

    /// One full Gibbs sweep: parameters, sigma, then latent blocks.
    pub fn step(&mut self) -> Result<()> {
        if !self.conjugate.is_empty() {
            self.conjugate_update()?;
        }
        for i in 0..self.theta.len() {
            self.param_update(i)?;
        }
        if self.model.sigma.is_unknown() {
            self.sigma_update()?;
        }
        for u in 0..self.units.len() {
            self.sweep_blocks(u)?;
        }
        self.iteration += 1;
        Ok(())
    }

    fn empty_trace(&self) -> Trace {
        let curves = self
            .units
            .iter()
            .flat_map(|u| {
                u.cells.iter().map(move |c| CurveDraws {
                    label: c.label.clone(),
                    times: u.output.iter().map(|&k| u.grid.nodes()[k]).collect(),
                    survival: Vec::new(),
                    hazard: Vec::new(),
                    density: Vec::new(),
                })
            })
            .collect();
        Trace {
            parameter_names: self.model.drift.names().to_vec(),
            theta: Vec::new(),
            sigma: self.model.sigma.is_unknown().then(Vec::new),
            loglik: Vec::new(),
            iterations: Vec::new(),
            curves,
            acceptance: AcceptanceStats::default(),
            seed: self.config.seed,
            chain: self.chain,
        }
    }

    fn record(&mut self, trace: &mut Trace) -> Result<()> {
        trace.theta.push(self.theta.clone());
        if let Some(s) = trace.sigma.as_mut() {
            s.push(self.sigma);
        }
        trace.loglik.push(self.log_likelihood());
        trace.iterations.push(self.iteration);
        if self.config.record_curves {
            self.refresh_tails()?;
            let mut slot = 0;
            for u in &self.units {
                for c in &u.cells {
                    let draws = &mut trace.curves[slot];
                    let (mut s, mut h, mut f) = (Vec::new(), Vec::new(), Vec::new());
                    curve_triplet(u.grid.nodes(), &c.path, self.hazard, &u.output, &mut s, &mut h, &mut f);
                    draws.survival.push(s);
                    draws.hazard.push(h);
                    draws.density.push(f);
                    slot += 1;
                }
            }
        }
        Ok(())
    }

    /// Runs the configured number of iterations and returns the retained draws.
    pub fn run(mut self) -> Result<Trace> {
        let mut trace = self.empty_trace();
        let burn = self.config.burn_in;
        let thin = self.config.thin;
        while self.iteration < self.config.iterations {
            self.step()?;
            let it = self.iteration;
            if it > burn && (it - burn) % thin == 0 {
                self.record(&mut trace)?;
            }
        }
        trace.acceptance = self.stats;
        Ok(trace)
    }
}

/// Observations of each latent unit, split into cells:
/// `(label, covariates, [(time, is_event)])`.
pub(crate) type CellData = (String, Vec<f64>, Vec<(f64, bool)>);

pub(crate) fn partition(model: &ModelInstance, data: &SurvivalDataset) -> Result<Vec<Vec<CellData>>> {
    let row = |o: &crate::survival::Observation| (o.time, o.status.is_event());
    match &model.grouping {
        Grouping::Pooled => Ok(vec![vec![("all".into(), Vec::new(), data.observations().iter().map(row).collect())]]),
        Grouping::ByGroup => Ok(data
            .by_group()
            .into_iter()
            .map(|(label, obs)| vec![(label, Vec::new(), obs.iter().map(row).collect())])
            .collect()),
        Grouping::Covariates(spec) => {
            let mut cells: Vec<CellData> = spec
                .cells
                .iter()
                .map(|z| {
                    let label = if z.is_empty() {
                        "all".to_string()
                    } else {
                        spec.names
                            .iter()
                            .zip(z)
                            .map(|(n, v)| format!("{n}={v}"))
                            .collect::<Vec<_>>()
                            .join(",")
                    };
                    (label, z.clone(), Vec::new())
                })
                .collect();
            for o in data.observations() {
                let z = spec.project(data.covariate_names(), &o.covariates)?;
                let c = spec.cell_of(&z)?;
                cells[c].2.push(row(o));
            }
            Ok(vec![cells])
        }
    }
}

/// Runs one chain of `model` on `data`.
pub fn run_chain(model: &ModelInstance, data: &SurvivalDataset, config: &SamplerConfig) -> Result<Trace> {
    Sampler::new(model, data, config, 0)?.run()
}

/// Runs `n` independent chains, each on its own randomness streams.
pub fn run_chains(
    model: &ModelInstance,
    data: &SurvivalDataset,
    config: &SamplerConfig,
    n: usize,
    mode: ExecMode,
) -> Result<Vec<Trace>> {
    map_indexed(mode, n, |c| Sampler::new(model, data, config, c)?.run())
        .into_iter()
        .collect()
}
