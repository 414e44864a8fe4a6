use super::hpd::{shortest_window, MIN_HPD_DRAWS};
use crate::error::{Error, Result};
use crate::mcmc::CurveDraws;

/// Posterior mean and pointwise band of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    pub level: f64,
}

/// Nodewise mean and HPD band of curve draws, one row per draw. With fewer
/// than the minimum band size the band spans all draws.
pub fn curve_posterior_mean(times: &[f64], draws: &[Vec<f64>], level: f64) -> Result<CurveEstimate> {
    if draws.is_empty() {
        return Err(Error::InvalidArgument("no curve draws".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("band level {level} outside (0, 1)")));
    }
    if let Some(row) = draws.iter().find(|r| r.len() != times.len()) {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: row.len(),
        });
    }
    let n = draws.len();
    let mut est = CurveEstimate {
        times: times.to_vec(),
        mean: Vec::with_capacity(times.len()),
        band_lo: Vec::with_capacity(times.len()),
        band_hi: Vec::with_capacity(times.len()),
        level,
    };
    let mut column = Vec::with_capacity(n);
    for j in 0..times.len() {
        column.clear();
        column.extend(draws.iter().map(|r| r[j]));
        est.mean.push(column.iter().sum::<f64>() / n as f64);
        column.sort_by(f64::total_cmp);
        let (lo, hi) = if n < MIN_HPD_DRAWS {
            (column[0], column[n - 1])
        } else {
            shortest_window(&column, level)
        };
        est.band_lo.push(lo);
        est.band_hi.push(hi);
    }
    Ok(est)
}

/// Survival, hazard and density estimates of one set of curve draws.
pub fn curve_estimates(draws: &CurveDraws, level: f64) -> Result<[CurveEstimate; 3]> {
    Ok([
        curve_posterior_mean(&draws.times, &draws.survival, level)?,
        curve_posterior_mean(&draws.times, &draws.hazard, level)?,
        curve_posterior_mean(&draws.times, &draws.density, level)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_draw_has_zero_width() {
        let e = curve_posterior_mean(&[0.0, 1.0], &[vec![1.0, 0.5]], 0.9).unwrap();
        assert_eq!(e.mean, vec![1.0, 0.5]);
        assert_eq!(e.band_lo, e.mean);
        assert_eq!(e.band_hi, e.mean);
    }

    #[test]
    fn grid_mismatch_errors() {
        assert!(curve_posterior_mean(&[0.0, 1.0], &[vec![1.0]], 0.9).is_err());
        assert!(curve_posterior_mean(&[0.0], &[], 0.9).is_err());
    }

    proptest! {
        #[test]
        fn mean_of_monotone_draws_is_monotone(
            steps in prop::collection::vec(prop::collection::vec(0.0f64..0.2, 8), 1..40),
        ) {
            let times: Vec<f64> = (0..9).map(f64::from).collect();
            let draws: Vec<Vec<f64>> = steps
                .iter()
                .map(|s| {
                    let mut v = vec![1.0];
                    for d in s {
                        let last = *v.last().unwrap();
                        v.push(last * (1.0 - d));
                    }
                    v
                })
                .collect();
            let e = curve_posterior_mean(&times, &draws, 0.9).unwrap();
            for w in e.mean.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
            for j in 0..times.len() {
                prop_assert!(e.band_lo[j] <= e.band_hi[j]);
            }
        }
    }
}
