use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DiffusionPath, NoiseIncrements, TimeGrid};
use crate::error::{Error, Result};

/// Fills `values[1..]` with a `sigma`-scaled Brownian motion started at
/// `values[0]`.
pub(crate) fn fill_brownian<R: Rng + ?Sized>(
    times: &[f64],
    values: &mut [f64],
    sigma: f64,
    rng: &mut R,
) {
    for k in 1..values.len() {
        let z: f64 = rng.sample(StandardNormal);
        values[k] = values[k - 1] + sigma * (times[k] - times[k - 1]).sqrt() * z;
    }
}

/// Fills the interior of `values` with a `sigma`-scaled Brownian bridge
/// pinned at `values[0]` and `values[last]`, node by node from the left
/// using the conditional Gaussian law given the previous node and the
/// right end point.
pub(crate) fn fill_bridge<R: Rng + ?Sized>(
    times: &[f64],
    values: &mut [f64],
    sigma: f64,
    rng: &mut R,
) {
    let n = values.len();
    if n < 3 {
        return;
    }
    let t_end = times[n - 1];
    let x_end = values[n - 1];
    for k in 1..n - 1 {
        let (t_prev, t) = (times[k - 1], times[k]);
        let span = t_end - t_prev;
        let frac = (t - t_prev) / span;
        let mean = values[k - 1] + (x_end - values[k - 1]) * frac;
        let var = sigma * sigma * (t - t_prev) * (t_end - t) / span;
        let z: f64 = rng.sample(StandardNormal);
        values[k] = mean + var.sqrt() * z;
    }
}

fn check_sigma(sigma: f64, strict: bool) -> Result<()> {
    let ok = sigma.is_finite() && if strict { sigma > 0.0 } else { sigma >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("invalid sigma {sigma}")))
    }
}

/// Path of `origin + sigma * B` on `grid`.
pub fn sample_brownian_path<R: Rng + ?Sized>(
    grid: &Arc<TimeGrid>,
    sigma: f64,
    origin: f64,
    rng: &mut R,
) -> Result<DiffusionPath> {
    check_sigma(sigma, false)?;
    let mut values = vec![0.0; grid.len()];
    values[0] = origin;
    fill_brownian(grid.nodes(), &mut values, sigma, rng);
    DiffusionPath::new(Arc::clone(grid), values)
}

/// Brownian bridge from `start_value` at the first node to `end_value` at
/// the last node.
pub fn sample_brownian_bridge<R: Rng + ?Sized>(
    grid: &Arc<TimeGrid>,
    sigma: f64,
    start_value: f64,
    end_value: f64,
    rng: &mut R,
) -> Result<DiffusionPath> {
    check_sigma(sigma, true)?;
    let n = grid.len();
    let mut values = vec![0.0; n];
    values[0] = start_value;
    values[n - 1] = end_value;
    fill_bridge(grid.nodes(), &mut values, sigma, rng);
    DiffusionPath::new(Arc::clone(grid), values)
}

/// Standard Brownian increments on every interval of `grid`.
pub fn sample_noise<R: Rng + ?Sized>(grid: &Arc<TimeGrid>, rng: &mut R) -> NoiseIncrements {
    let increments = grid
        .nodes()
        .windows(2)
        .map(|w| {
            let z: f64 = rng.sample(StandardNormal);
            (w[1] - w[0]).sqrt() * z
        })
        .collect();
    NoiseIncrements {
        grid: Arc::clone(grid),
        increments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::path::make_grid;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn zero_sigma_is_constant() {
        let g = make_grid(0.0, 1.0, 0.1, &[]).unwrap().shared();
        let p = sample_brownian_path(&g, 0.0, 3.5, &mut stream_rng(1, 0)).unwrap();
        assert!(p.values().iter().all(|&v| v == 3.5));
    }

    #[test]
    fn unit_increment_moments() {
        let g = TimeGrid::new(vec![0.0, 1.0]).unwrap().shared();
        let mut rng = stream_rng(11, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_brownian_path(&g, 1.0, 0.0, &mut rng).unwrap().values()[1])
            .collect();
        let (m, v) = moments(&xs);
        assert!(m.abs() < 3.0 / (n as f64).sqrt(), "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn same_seed_same_path() {
        let g = make_grid(0.0, 2.0, 0.01, &[]).unwrap().shared();
        let a = sample_brownian_path(&g, 1.3, 0.2, &mut stream_rng(5, 3)).unwrap();
        let b = sample_brownian_path(&g, 1.3, 0.2, &mut stream_rng(5, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bridge_is_pinned() {
        let g = make_grid(0.0, 1.7, 0.013, &[0.5]).unwrap().shared();
        let mut rng = stream_rng(2, 0);
        for _ in 0..50 {
            let p = sample_brownian_bridge(&g, 2.5, -0.3, 1.234567, &mut rng).unwrap();
            assert_eq!(p.values()[0], -0.3);
            assert_eq!(*p.values().last().unwrap(), 1.234567);
        }
    }

    #[test]
    fn bridge_without_interior() {
        let g = TimeGrid::new(vec![0.0, 1.0]).unwrap().shared();
        let p = sample_brownian_bridge(&g, 1.0, 1.0, 2.0, &mut stream_rng(0, 0)).unwrap();
        assert_eq!(p.values(), &[1.0, 2.0]);
    }

    #[test]
    fn bridge_midpoint_moments() {
        let g = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap().shared();
        let mut rng = stream_rng(3, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_brownian_bridge(&g, 1.0, 0.0, 0.0, &mut rng).unwrap().values()[1])
            .collect();
        let (m, v) = moments(&xs);
        let se_mean = (0.25 / n as f64).sqrt();
        // sd of the sample variance of a Gaussian is var * sqrt(2/(n-1))
        let se_var = 0.25 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!(m.abs() < 3.0 * se_mean, "mean {m}");
        assert!((v - 0.25).abs() < 3.0 * se_var, "var {v}");
    }

    #[test]
    fn rejects_bad_sigma() {
        let g = make_grid(0.0, 1.0, 0.5, &[]).unwrap().shared();
        assert!(sample_brownian_path(&g, -1.0, 0.0, &mut stream_rng(0, 0)).is_err());
        assert!(sample_brownian_bridge(&g, 0.0, 0.0, 0.0, &mut stream_rng(0, 0)).is_err());
    }
}
