use super::DiffusionPath;
use crate::error::{Error, Result};
use crate::model::DriftSpec;

/// Discretized Girsanov log-density over the intervals `a..b` (node
/// indices), drift evaluated at the left end point of each interval.
pub(crate) fn girsanov_range(
    times: &[f64],
    values: &[f64],
    drift: &DriftSpec,
    theta: &[f64],
    sigma: f64,
    a: usize,
    b: usize,
) -> f64 {
    let mut stoch = 0.0;
    let mut quad = 0.0;
    for k in a..b {
        let beta = drift.eval(values[k], theta);
        stoch += beta * (values[k + 1] - values[k]);
        quad += beta * beta * (times[k + 1] - times[k]);
    }
    (stoch - 0.5 * quad) / (sigma * sigma)
}

/// Log Radon–Nikodym derivative of the diffusion law with respect to
/// `sigma`-scaled Brownian motion, restricted to `window`.
pub fn girsanov_logdensity(
    path: &DiffusionPath,
    drift: &DriftSpec,
    theta: &[f64],
    sigma: f64,
    window: (f64, f64),
) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid sigma {sigma}")));
    }
    let a = path.grid().index_of(window.0)?;
    let b = path.grid().index_of(window.1)?;
    if b < a {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] is reversed",
            window.0, window.1
        )));
    }
    Ok(girsanov_range(
        path.times(),
        path.values(),
        drift,
        theta,
        sigma,
        a,
        b,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::path::{make_grid, sample_brownian_path, TimeGrid};

    fn ou() -> DriftSpec {
        DriftSpec::linear(vec![("theta", |x: f64, _: &[f64]| x)])
    }

    #[test]
    fn zero_drift_gives_zero() {
        let g = make_grid(0.0, 1.0, 0.01, &[]).unwrap().shared();
        let p = sample_brownian_path(&g, 1.0, 0.3, &mut stream_rng(0, 0)).unwrap();
        assert_eq!(girsanov_logdensity(&p, &ou(), &[0.0], 1.0, (0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn constant_drift_analytic() {
        let constant = DriftSpec::linear(vec![("c", |_: f64, _: &[f64]| 1.0)]);
        let g = TimeGrid::new(vec![0.0, 0.25, 0.5, 1.0]).unwrap().shared();
        let p = DiffusionPath::new(g, vec![0.0, 0.7, -0.1, 0.5]).unwrap();
        let v = girsanov_logdensity(&p, &constant, &[1.0], 1.0, (0.0, 1.0)).unwrap();
        assert!(v.abs() < 1e-15, "{v}");
    }

    #[test]
    fn window_additivity() {
        let g = make_grid(0.0, 2.0, 0.01, &[]).unwrap().shared();
        let p = sample_brownian_path(&g, 0.8, 1.0, &mut stream_rng(4, 0)).unwrap();
        let d = ou();
        let whole = girsanov_logdensity(&p, &d, &[-0.7], 0.8, (0.2, 1.5)).unwrap();
        let left = girsanov_logdensity(&p, &d, &[-0.7], 0.8, (0.2, 0.9)).unwrap();
        let right = girsanov_logdensity(&p, &d, &[-0.7], 0.8, (0.9, 1.5)).unwrap();
        assert!((whole - left - right).abs() < 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn window_off_grid() {
        let g = make_grid(0.0, 1.0, 0.1, &[]).unwrap().shared();
        let p = sample_brownian_path(&g, 1.0, 0.0, &mut stream_rng(0, 0)).unwrap();
        assert!(matches!(
            girsanov_logdensity(&p, &ou(), &[1.0], 1.0, (0.0, 0.55)),
            Err(Error::OffGrid { .. })
        ));
    }
}
