use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latent representation used by the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    /// The diffusion path itself on `[0, T]`.
    Centered,
    /// The path up to the last observation, Brownian increments after it.
    #[default]
    Pnc,
    /// The driving Brownian motion.
    Ncp,
}

impl fmt::Display for Parametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Centered => "centered",
            Self::Pnc => "pnc",
            Self::Ncp => "ncp",
        })
    }
}

impl FromStr for Parametrization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered" => Ok(Self::Centered),
            "pnc" => Ok(Self::Pnc),
            "ncp" => Ok(Self::Ncp),
            other => Err(Error::InvalidArgument(format!(
                "unknown parametrization '{other}' (expected centered, pnc or ncp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Path discretization step.
    pub dt: f64,
    /// Spacing of the block knots.
    pub block_length: f64,
    /// Time horizon; defaults to the largest observed time.
    pub horizon: Option<f64>,
    pub parametrization: Parametrization,
    pub seed: u64,
    /// Step of the random walk on `log sigma`.
    pub sigma_step: f64,
    /// Number of output nodes for recorded curves.
    pub output_nodes: usize,
    pub record_curves: bool,
    /// Starting parameter values; defaults to the prior means.
    pub initial_theta: Option<Vec<f64>>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 1_000,
            thin: 1,
            dt: 0.01,
            block_length: 0.2,
            horizon: None,
            parametrization: Parametrization::Pnc,
            seed: 0,
            sigma_step: 0.1,
            output_nodes: 100,
            record_curves: true,
            initial_theta: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSampler(m));
        if self.burn_in > self.iterations {
            return bad(format!(
                "burn-in {} exceeds iterations {}",
                self.burn_in, self.iterations
            ));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.block_length >= 2.0 * self.dt && self.block_length.is_finite()) {
            return bad(format!(
                "block length {} must be at least twice dt {}",
                self.block_length, self.dt
            ));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("horizon must be positive, got {t}"));
            }
        }
        if !(self.sigma_step > 0.0 && self.sigma_step.is_finite()) {
            return bad("sigma step must be positive".into());
        }
        if self.output_nodes < 2 {
            return bad("at least two output nodes are needed".into());
        }
        Ok(())
    }

    /// Number of draws retained by a run.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = SamplerConfig::default();
        ok.validate().unwrap();
        assert_eq!(ok.retained(), 9_000);
        for cfg in [
            SamplerConfig { burn_in: 20_000, ..ok.clone() },
            SamplerConfig { thin: 0, ..ok.clone() },
            SamplerConfig { block_length: 0.015, ..ok.clone() },
            SamplerConfig { horizon: Some(-1.0), ..ok.clone() },
            SamplerConfig { output_nodes: 1, ..ok.clone() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidSampler(_))));
        }
        let edge = SamplerConfig { iterations: 10, burn_in: 10, ..ok };
        edge.validate().unwrap();
        assert_eq!(edge.retained(), 0);
    }

    #[test]
    fn parametrization_names() {
        for p in [Parametrization::Centered, Parametrization::Pnc, Parametrization::Ncp] {
            assert_eq!(p.to_string().parse::<Parametrization>().unwrap(), p);
        }
        assert!("other".parse::<Parametrization>().is_err());
    }
}
