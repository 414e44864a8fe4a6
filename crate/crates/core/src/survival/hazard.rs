use serde::{Deserialize, Serialize};

/// Hazard function `h(u)` applied to the latent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardSpec {
    /// `|u|`
    Abs,
    /// `u^2`
    Square,
    /// `max(u, 0)`; intended for positive processes.
    Identity,
    /// `exp(scale * u)`: the identity hazard expressed in log-scaled coordinates.
    ExpScaled { scale: f64 },
}

impl HazardSpec {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Self::Abs => u.abs(),
            Self::Square => u * u,
            Self::Identity => u.max(0.0),
            Self::ExpScaled { scale } => (scale * u).exp(),
        }
    }

    #[inline]
    pub fn ln_eval(&self, u: f64) -> f64 {
        match *self {
            Self::ExpScaled { scale } => scale * u,
            _ => self.eval(u).ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn nonnegative(u in -1e3f64..1e3) {
            for h in [HazardSpec::Abs, HazardSpec::Square, HazardSpec::Identity, HazardSpec::ExpScaled { scale: 0.1 }] {
                prop_assert!(h.eval(u) >= 0.0);
            }
        }
    }

    #[test]
    fn exp_scaled_inverts_log_map() {
        let sigma = 0.37;
        for x in [0.2, 1.0, 7.5] {
            let y = f64::ln(x) / sigma;
            let h = HazardSpec::ExpScaled { scale: sigma }.eval(y);
            assert!((h - x).abs() < 1e-14 * x);
        }
    }
}
