use crate::error::{Error, Result};

/// Smallest number of draws accepted by [`pointwise_hpd_band`].
pub const MIN_HPD_DRAWS: usize = 20;

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("band level {level} outside (0, 1)")))
    }
}

/// Number of draws a band at `level` must contain.
fn window_count(level: f64, n: usize) -> usize {
    ((level * n as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Shortest window of `ceil(level n)` sorted draws; the lowest start wins
/// ties.
pub(crate) fn shortest_window(sorted: &[f64], level: f64) -> (f64, f64) {
    let m = window_count(level, sorted.len());
    let mut best = 0;
    let mut width = f64::INFINITY;
    for i in 0..=sorted.len() - m {
        let w = sorted[i + m - 1] - sorted[i];
        if w < width {
            width = w;
            best = i;
        }
    }
    (sorted[best], sorted[best + m - 1])
}

/// Highest posterior density interval of one set of draws.
pub fn hpd_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if draws.len() < MIN_HPD_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "{} draws, at least {MIN_HPD_DRAWS} needed for a band",
            draws.len()
        )));
    }
    if draws.iter().any(|d| d.is_nan()) {
        return Err(Error::InvalidArgument("NaN draw".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(shortest_window(&sorted, level))
}

/// Per-node HPD band; `draws[i]` holds every draw at node `i`.
pub fn pointwise_hpd_band(draws: &[Vec<f64>], level: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lo = Vec::with_capacity(draws.len());
    let mut hi = Vec::with_capacity(draws.len());
    for node in draws {
        let (a, b) = hpd_interval(node, level)?;
        lo.push(a);
        hi.push(b);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_draws_give_zero_width() {
        assert_eq!(hpd_interval(&[2.5; 30], 0.9).unwrap(), (2.5, 2.5));
    }

    #[test]
    fn uniform_order_statistics_take_the_lowest_window() {
        let d: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(hpd_interval(&d, 0.9).unwrap(), (0.0, 89.0));
    }

    #[test]
    fn gaussian_quantiles() {
        let mut rng = stream_rng(11, 0);
        let d: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let (lo, hi) = hpd_interval(&d, 0.9).unwrap();
        assert!((lo + 1.645).abs() < 0.03, "{lo}");
        assert!((hi - 1.645).abs() < 0.03, "{hi}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(hpd_interval(&[1.0; 19], 0.9).is_err());
        assert!(hpd_interval(&[1.0; 30], 1.0).is_err());
        assert!(hpd_interval(&[1.0; 30], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn window_is_minimal_and_holds_enough(
            d in prop::collection::vec(-100.0f64..100.0, 20..120),
            level in 0.05f64..0.99,
        ) {
            let (lo, hi) = hpd_interval(&d, level).unwrap();
            prop_assert!(lo <= hi);
            let m = window_count(level, d.len());
            let inside = d.iter().filter(|&&x| x >= lo && x <= hi).count();
            prop_assert!(inside >= m);
            prop_assert!(inside as f64 >= level * d.len() as f64 - 1e-9);
            let mut s = d.clone();
            s.sort_by(f64::total_cmp);
            for i in 0..=s.len() - m {
                prop_assert!(s[i + m - 1] - s[i] >= hi - lo);
            }
        }
    }
}
