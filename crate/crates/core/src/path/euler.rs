use std::sync::Arc;

use super::{DiffusionPath, NoiseIncrements, TimeGrid};
use crate::error::{Error, Result};
use crate::model::DriftSpec;

/// Euler–Maruyama recursion in place: given `values[from]`, fills
/// `values[from + 1..]` using `x[k+1] = x[k] + drift(x[k]) dt_k + sigma dW_k`
/// with `dW_k = increments[k]`.
pub(crate) fn euler_fill(
    times: &[f64],
    values: &mut [f64],
    increments: &[f64],
    drift: &DriftSpec,
    theta: &[f64],
    sigma: f64,
    from: usize,
) -> Result<()> {
    for k in from..values.len() - 1 {
        let x = values[k];
        let b = drift.eval(x, theta);
        if !b.is_finite() {
            return Err(Error::NonFiniteDrift {
                time: times[k],
                value: b,
            });
        }
        let next = x + b * (times[k + 1] - times[k]) + sigma * increments[k];
        if !next.is_finite() {
            return Err(Error::NonFiniteDrift {
                time: times[k + 1],
                value: next,
            });
        }
        values[k + 1] = next;
    }
    Ok(())
}

/// Simulates the SDE `dX = drift(X, theta) dt + sigma dB`, `X(t0) = x0`,
/// driven by the given Brownian increments.
pub fn euler_maruyama_simulate(
    drift: &DriftSpec,
    theta: &[f64],
    sigma: f64,
    x0: f64,
    grid: &Arc<TimeGrid>,
    noise: &NoiseIncrements,
) -> Result<DiffusionPath> {
    if !Arc::ptr_eq(grid, noise.grid()) && **grid != **noise.grid() {
        return Err(Error::InvalidArgument(
            "noise increments are defined on a different grid".into(),
        ));
    }
    if !x0.is_finite() || !sigma.is_finite() {
        return Err(Error::InvalidArgument("non-finite start or sigma".into()));
    }
    let mut values = vec![0.0; grid.len()];
    values[0] = x0;
    euler_fill(
        grid.nodes(),
        &mut values,
        noise.increments(),
        drift,
        theta,
        sigma,
        0,
    )?;
    DiffusionPath::new(Arc::clone(grid), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::path::{make_grid, sample_noise};

    fn linear() -> DriftSpec {
        DriftSpec::linear(vec![("theta", |x: f64, _: &[f64]| x)])
    }

    #[test]
    fn deterministic_linear_recursion() {
        let g = make_grid(0.0, 1.0, 0.1, &[]).unwrap().shared();
        let noise = sample_noise(&g, &mut stream_rng(1, 0));
        let p = euler_maruyama_simulate(&linear(), &[0.5], 0.0, 1.0, &g, &noise).unwrap();
        for (k, v) in p.values().iter().enumerate() {
            let expected = (1.0 + 0.5 * 0.1f64).powi(k as i32);
            assert!((v - expected).abs() < 1e-12, "node {k}: {v} vs {expected}");
        }
    }

    #[test]
    fn zero_drift_is_scaled_noise() {
        let g = make_grid(0.0, 1.0, 0.05, &[]).unwrap().shared();
        let noise = sample_noise(&g, &mut stream_rng(2, 0));
        let p = euler_maruyama_simulate(&linear(), &[0.0], 2.0, 0.7, &g, &noise).unwrap();
        let b = noise.to_path();
        for (x, w) in p.values().iter().zip(b.values()) {
            assert!((x - (0.7 + 2.0 * w)).abs() < 1e-12);
        }
    }

    #[test]
    fn gompertz_ode_error_halves() {
        // sigma = 0: x' = alpha x, x(0) = beta  =>  beta exp(alpha t)
        let (alpha, beta) = (1.3, 0.4);
        let err = |dt: f64| {
            let g = make_grid(0.0, 1.0, dt, &[]).unwrap().shared();
            let noise = sample_noise(&g, &mut stream_rng(0, 0));
            let p = euler_maruyama_simulate(&linear(), &[alpha], 0.0, beta, &g, &noise).unwrap();
            p.times()
                .iter()
                .zip(p.values())
                .map(|(t, x)| (x - beta * (alpha * t).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(0.01), err(0.005), err(0.0025));
        assert!((e1 / e2 - 2.0).abs() < 0.1, "{e1} {e2}");
        assert!((e2 / e3 - 2.0).abs() < 0.1, "{e2} {e3}");
    }

    #[test]
    fn explosive_drift_fails_loudly() {
        let quad = DriftSpec::general(1, vec!["theta".into()], |x, th| th[0] * x * x);
        let g = make_grid(0.0, 5.0, 0.1, &[]).unwrap().shared();
        let noise = sample_noise(&g, &mut stream_rng(0, 0));
        let r = euler_maruyama_simulate(&quad, &[10.0], 0.0, 10.0, &g, &noise);
        assert!(matches!(r, Err(Error::NonFiniteDrift { .. })));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = make_grid(0.0, 1.0, 0.1, &[]).unwrap().shared();
        let h = make_grid(0.0, 1.0, 0.2, &[]).unwrap().shared();
        let noise = sample_noise(&h, &mut stream_rng(0, 0));
        assert!(euler_maruyama_simulate(&linear(), &[0.0], 1.0, 0.0, &g, &noise).is_err());
    }
}
