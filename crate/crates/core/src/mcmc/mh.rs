use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::Distribution1D;

/// Metropolis–Hastings decision for a log acceptance ratio; NaN rejects.
pub(crate) fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Independence sampler step: proposes from `proposal` and accepts with
/// probability `min(1, pi(x*) q(x) / (pi(x) q(x*)))`. Returns the new value and
/// whether the proposal was accepted.
pub fn independence_update<R, F>(
    current: f64,
    proposal: &Distribution1D,
    log_target: F,
    rng: &mut R,
) -> Result<(f64, bool)>
where
    R: Rng + ?Sized,
    F: FnOnce(f64) -> f64,
{
    let q_cur = proposal.logpdf(current);
    if q_cur == f64::NEG_INFINITY {
        return Err(Error::InvalidSampler(format!(
            "proposal {proposal:?} has zero density at the current value {current}"
        )));
    }
    let cand = proposal.sample(rng);
    independence_decision(current, cand, q_cur, proposal.logpdf(cand), log_target, rng)
}

pub(crate) fn independence_decision<R, F>(
    current: f64,
    cand: f64,
    q_cur: f64,
    q_cand: f64,
    log_target: F,
    rng: &mut R,
) -> Result<(f64, bool)>
where
    R: Rng + ?Sized,
    F: FnOnce(f64) -> f64,
{
    if cand == current {
        return Ok((current, true));
    }
    let ratio = log_target(cand) + q_cur - q_cand;
    if accept(ratio, rng) {
        Ok((cand, true))
    } else {
        Ok((current, false))
    }
}

/// Gaussian random-walk step of size `step`.
pub(crate) fn random_walk_proposal<R: Rng + ?Sized>(current: f64, step: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    current + step * z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    #[test]
    fn proposal_equal_to_target_always_accepts() {
        let q = Distribution1D::Normal { mean: 1.0, var: 2.0 };
        let mut rng = stream_rng(1, 0);
        let mut x = 0.3;
        for _ in 0..1000 {
            let cur = x;
            let (next, ok) = independence_update(x, &q, |v| q.logpdf(v) - q.logpdf(cur), &mut rng).unwrap();
            assert!(ok);
            x = next;
        }
    }

    #[test]
    fn proposing_current_value_accepts() {
        let mut rng = stream_rng(1, 0);
        let (v, ok) = independence_decision(0.4, 0.4, -1.0, -1.0, |_| f64::NEG_INFINITY, &mut rng).unwrap();
        assert!(ok);
        assert_eq!(v, 0.4);
    }

    #[test]
    fn zero_density_at_current_is_invalid() {
        let q = Distribution1D::Beta { a: 0.5, b: 0.5 };
        let mut rng = stream_rng(1, 0);
        assert!(matches!(
            independence_update(1.5, &q, |_| 0.0, &mut rng),
            Err(Error::InvalidSampler(_))
        ));
    }

    #[test]
    fn arcsine_proposal_for_uniform_target() {
        let q = Distribution1D::Beta { a: 0.5, b: 0.5 };
        let u = Distribution1D::Uniform { lo: 0.0, hi: 1.0 };
        let mut rng = stream_rng(9, 0);
        let n = 100_000;
        let mut x = 0.5;
        let mut draws = Vec::with_capacity(n);
        for _ in 0..n {
            let cur = x;
            x = independence_update(x, &q, |v| u.logpdf(v) - u.logpdf(cur), &mut rng).unwrap().0;
            draws.push(x);
        }
        let mean = draws.iter().sum::<f64>() / n as f64;
        // effective sample size from the lag-1 autocorrelation of the chain
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
        let rho = draws.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n as f64 * var);
        let ess = n as f64 * (1.0 - rho) / (1.0 + rho);
        let se = (var / ess).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}, se {se}");
    }
}
