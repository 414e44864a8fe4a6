/// Autocorrelation diagnostics of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Sample autocorrelations at lags `0..=max_lag`.
    pub acf: Vec<f64>,
    pub ess: f64,
    /// Integrated autocorrelation time, `N / ESS`.
    pub iat: f64,
    /// Set when the series is constant and its autocorrelation undefined.
    pub constant: bool,
}

/// Sample autocorrelation at lags `0..=max_lag` (biased normalization).
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum();
    if !(c0 > 0.0) || !c0.is_finite() {
        return None;
    }
    Some(
        (0..=max_lag.min(n - 1))
            .map(|k| {
                if k == 0 {
                    1.0
                } else {
                    centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / c0
                }
            })
            .collect(),
    )
}

/// Autocorrelation, effective sample size and integrated autocorrelation
/// time with Geyer's initial positive sequence truncation. Sums run over
/// lags up to `max_lag`; ESS is capped at the series length.
pub fn acf_ess(series: &[f64], max_lag: usize) -> crate::Result<Diagnostics> {
    let n = series.len();
    if n <= max_lag || n < 2 {
        return Err(crate::Error::InvalidArgument(format!(
            "series of length {n} is too short for lag {max_lag}"
        )));
    }
    let Some(acf) = autocorrelation(series, max_lag) else {
        return Ok(Diagnostics {
            acf: vec![1.0],
            ess: n as f64,
            iat: 1.0,
            constant: true,
        });
    };
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < acf.len() {
        let gamma = acf[2 * k] + acf[2 * k + 1];
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
        k += 1;
    }
    let tau = tau.max(1.0);
    Ok(Diagnostics {
        acf,
        ess: n as f64 / tau,
        iat: tau,
        constant: false,
    })
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of a KS distance `d` from `n` draws.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for j in 1..=100 {
        let term = 2.0 * (-1.0f64).powi(j - 1) * (-2.0 * (j as f64 * lambda).powi(2)).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}
