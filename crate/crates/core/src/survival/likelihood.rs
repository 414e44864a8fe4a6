use super::{HazardSpec, Observation, SurvivalDataset};
use crate::error::{Error, Result};
use crate::path::{DiffusionPath, TimeGrid};

/// Left-Riemann cumulative hazard at every node.
pub(crate) fn cumulative_profile(times: &[f64], values: &[f64], h: HazardSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for k in 0..values.len() - 1 {
        acc += h.eval(values[k]) * (times[k + 1] - times[k]);
        out.push(acc);
    }
    out
}

/// `int_{origin}^{t} h(x_s) ds` as a left-Riemann sum; `t` must be a node.
pub fn cumulative_hazard(path: &DiffusionPath, h: HazardSpec, t: f64) -> Result<f64> {
    let k = path.grid().index_of(t)?;
    let (times, values) = (path.times(), path.values());
    let mut acc = 0.0;
    for i in 0..k {
        acc += h.eval(values[i]) * (times[i + 1] - times[i]);
    }
    Ok(acc)
}

/// Observations resolved to grid node indices, sorted by node.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct ObservationIndex {
    pub nodes: Vec<usize>,
    pub events: Vec<bool>,
}

impl ObservationIndex {
    pub fn build(grid: &TimeGrid, observations: &[Observation]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(observations.len());
        for o in observations {
            if o.time > grid.end() * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "observation at {} lies beyond the path end {}",
                    o.time,
                    grid.end()
                )));
            }
            pairs.push((grid.index_of(o.time)?, o.status.is_event()));
        }
        pairs.sort_by_key(|p| p.0);
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            events: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest observation node, 0 when empty.
    pub fn max_node(&self) -> usize {
        self.nodes.last().copied().unwrap_or(0)
    }
}

/// Censored log-likelihood of path values against indexed observations.
pub(crate) fn loglik_values(
    times: &[f64],
    values: &[f64],
    h: HazardSpec,
    obs: &ObservationIndex,
) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    let mut cum = 0.0;
    let mut j = 0;
    let last = obs.max_node();
    for k in 0..=last {
        while j < obs.len() && obs.nodes[j] == k {
            if obs.events[j] {
                let lh = h.ln_eval(values[k]);
                if lh == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                total += lh;
            }
            total -= cum;
            j += 1;
        }
        if k < last {
            cum += h.eval(values[k]) * (times[k + 1] - times[k]);
        }
    }
    total
}

/// Change in log-likelihood when the values at nodes `lo..=hi` change from
/// `old` to `new` (all other nodes identical).
pub(crate) fn loglik_delta(
    times: &[f64],
    old: &[f64],
    new: &[f64],
    lo: usize,
    hi: usize,
    h: HazardSpec,
    obs: &ObservationIndex,
) -> f64 {
    if obs.is_empty() || lo > obs.max_node() {
        return 0.0;
    }
    let hi = hi.min(old.len() - 1);
    let mut delta = 0.0;
    let mut d_cum = 0.0;
    let mut j = obs.nodes.partition_point(|&n| n < lo);
    for k in lo..=hi {
        while j < obs.len() && obs.nodes[j] == k {
            if obs.events[j] {
                let ln_new = h.ln_eval(new[k]);
                let ln_old = h.ln_eval(old[k]);
                if ln_new == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                if ln_old == f64::NEG_INFINITY {
                    return f64::INFINITY;
                }
                delta += ln_new - ln_old;
            }
            delta -= d_cum;
            j += 1;
        }
        if k + 1 < old.len() {
            d_cum += (h.eval(new[k]) - h.eval(old[k])) * (times[k + 1] - times[k]);
        }
    }
    // observations strictly after hi see the full change of the integral
    let after = obs.len() - j;
    if after > 0 {
        let d_tail = if hi + 1 < old.len() {
            d_cum
        } else {
            0.0
        };
        delta -= d_tail * after as f64;
    }
    delta
}

/// Log-likelihood of right-censored data given the latent path:
/// `sum_events log h(x_y) - sum_all int_0^y h(x_s) ds`.
pub fn log_likelihood(data: &SurvivalDataset, path: &DiffusionPath, h: HazardSpec) -> Result<f64> {
    let idx = ObservationIndex::build(path.grid(), data.observations())?;
    Ok(loglik_values(path.times(), path.values(), h, &idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::path::{make_grid, sample_brownian_path, TimeGrid};
    use proptest::prelude::*;

    fn constant_path(c: f64, t_end: f64, extra: &[f64]) -> DiffusionPath {
        let g = make_grid(0.0, t_end, 0.05, extra).unwrap().shared();
        let n = g.len();
        DiffusionPath::new(g, vec![c; n]).unwrap()
    }

    #[test]
    fn constant_square_hazard() {
        let p = constant_path(1.5, 2.0, &[]);
        let v = cumulative_hazard(&p, HazardSpec::Square, 1.0).unwrap();
        assert!((v - 2.25).abs() < 1e-12);
        assert_eq!(cumulative_hazard(&p, HazardSpec::Square, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hand_left_riemann() {
        let g = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap().shared();
        let p = DiffusionPath::new(g, vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(cumulative_hazard(&p, HazardSpec::Abs, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn single_event_and_censoring() {
        let c = 2.5;
        let y = 0.7;
        let p = constant_path(c, 1.0, &[y]);
        let ev = SurvivalDataset::new(vec![Observation::event(y)], "t").unwrap();
        let ce = SurvivalDataset::new(vec![Observation::censored(y)], "t").unwrap();
        let l1 = log_likelihood(&ev, &p, HazardSpec::Identity).unwrap();
        let l2 = log_likelihood(&ce, &p, HazardSpec::Identity).unwrap();
        assert!((l1 - (c.ln() - c * y)).abs() < 1e-12);
        assert!((l2 + c * y).abs() < 1e-12);
    }

    #[test]
    fn two_events_one_censored() {
        let p = constant_path(2.0, 1.0, &[0.4, 0.8, 0.9]);
        let d = SurvivalDataset::new(
            vec![
                Observation::event(0.4),
                Observation::event(0.8),
                Observation::censored(0.9),
            ],
            "t",
        )
        .unwrap();
        let l = log_likelihood(&d, &p, HazardSpec::Square).unwrap();
        let expected = 2.0 * 4f64.ln() - 4.0 * (0.4 + 0.8 + 0.9);
        assert!((l - expected).abs() < 1e-12, "{l} vs {expected}");
    }

    #[test]
    fn zero_hazard_event_is_neg_infinity() {
        let p = constant_path(0.0, 1.0, &[0.5]);
        let d = SurvivalDataset::new(vec![Observation::event(0.5)], "t").unwrap();
        assert_eq!(
            log_likelihood(&d, &p, HazardSpec::Abs).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn errors() {
        let p = constant_path(1.0, 1.0, &[]);
        let off = SurvivalDataset::new(vec![Observation::event(0.333)], "t").unwrap();
        assert!(log_likelihood(&off, &p, HazardSpec::Abs).is_err());
        let beyond = SurvivalDataset::new(vec![Observation::event(3.0)], "t").unwrap();
        assert!(log_likelihood(&beyond, &p, HazardSpec::Abs).is_err());
    }

    fn random_setup(seed: u64) -> (DiffusionPath, ObservationIndex) {
        let g = make_grid(0.0, 1.0, 0.02, &[0.13, 0.5, 0.77, 0.91]).unwrap().shared();
        let p = sample_brownian_path(&g, 1.0, 0.5, &mut stream_rng(seed, 0)).unwrap();
        let obs = vec![
            Observation::event(0.13),
            Observation::censored(0.5),
            Observation::event(0.5),
            Observation::event(0.77),
            Observation::censored(0.91),
        ];
        let idx = ObservationIndex::build(&g, &obs).unwrap();
        (p, idx)
    }

    proptest! {
        #[test]
        fn delta_matches_full_recompute(seed in 0u64..500, lo in 1usize..40, len in 0usize..20, shift in -1.0f64..1.0) {
            let (p, idx) = random_setup(seed);
            let old = p.values().to_vec();
            let hi = (lo + len).min(old.len() - 1);
            let mut new = old.clone();
            for v in &mut new[lo..=hi] { *v += shift; }
            let t = p.times();
            let full = loglik_values(t, &new, HazardSpec::Square, &idx) - loglik_values(t, &old, HazardSpec::Square, &idx);
            let fast = loglik_delta(t, &old, &new, lo, hi, HazardSpec::Square, &idx);
            prop_assert!((full - fast).abs() < 1e-9 * full.abs().max(1.0), "{} vs {}", full, fast);
        }

        #[test]
        fn cumulative_nondecreasing(seed in 0u64..200) {
            let (p, _) = random_setup(seed);
            let prof = cumulative_profile(p.times(), p.values(), HazardSpec::Abs);
            prop_assert_eq!(prof[0], 0.0);
            prop_assert!(prof.windows(2).all(|w| w[1] >= w[0]));
        }

        #[test]
        fn extra_censoring_lowers_likelihood(seed in 0u64..200, which in 0usize..50) {
            let g = make_grid(0.0, 1.0, 0.02, &[0.3]).unwrap().shared();
            let p = sample_brownian_path(&g, 1.0, 0.5, &mut stream_rng(seed, 0)).unwrap();
            let base = vec![Observation::event(0.3)];
            let t_extra = g.nodes()[which];
            let mut more = base.clone();
            more.push(Observation::censored(t_extra.max(1e-9)));
            if t_extra > 0.0 {
                let a = log_likelihood(&SurvivalDataset::new(base, "t").unwrap(), &p, HazardSpec::Square).unwrap();
                let b = log_likelihood(&SurvivalDataset::new(more, "t").unwrap(), &p, HazardSpec::Square).unwrap();
                prop_assert!(b <= a);
            }
        }
    }
}
