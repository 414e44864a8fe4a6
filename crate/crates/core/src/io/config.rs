use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::dataset::load_dataset_csv;
use super::leukemia::embedded_leukemia;
use crate::error::{Error, Result};
use crate::mcmc::SamplerConfig;
use crate::model::{
    build_covariate_model, covariate_parameter_names, gompertz_perturbation, pareto_constant_coefficient,
    pareto_perturbation, toy_model, weibull_perturbation, CovariateModelSpec, Distribution1D, ModelInstance,
    PriorSpec, SigmaSpec, StartSpec,
};
use crate::summary::PriorMcSettings;
use crate::survival::SurvivalDataset;

/// Model families available from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Toy,
    Gompertz,
    Weibull,
    Pareto,
    ParetoConstant,
    Covariate,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    pub x0: Option<f64>,
    pub sigma: Option<f64>,
    /// Makes sigma unknown with this prior; `sigma` is then the initial value.
    pub sigma_prior: Option<Distribution1D>,
    /// One diffusion per group label with shared parameters.
    #[serde(default)]
    pub grouped: bool,
    pub lambda: Option<f64>,
    pub x_lambda: Option<f64>,
    #[serde(default)]
    pub start_covariates: Vec<String>,
    #[serde(default)]
    pub drift_covariates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Name of a built-in dataset (`leukemia`, in weeks).
    pub embedded: Option<String>,
    /// Every time is divided by this before fitting, e.g. 52 for weeks to
    /// years.
    pub time_divisor: Option<f64>,
    pub time_unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plot: bool,
    pub band_level: f64,
    pub chains: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plot: true,
            band_level: 0.9,
            chains: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    /// Common censoring time.
    pub cutoff: f64,
    /// Generating parameters; the prior means when absent.
    pub theta: Option<Vec<f64>>,
    pub dt: f64,
    /// Group labels for grouped models.
    pub groups: Vec<String>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n: 200,
            cutoff: 0.9,
            theta: None,
            dt: 0.001,
            groups: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BayesFactorConfig {
    pub samples: usize,
    pub dt: f64,
}

impl Default for BayesFactorConfig {
    fn default() -> Self {
        let d = PriorMcSettings::default();
        Self {
            samples: d.n_samples,
            dt: d.dt,
        }
    }
}

/// Complete description of a run, read from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Prior of each named parameter; missing entries use model defaults.
    #[serde(default)]
    pub prior: BTreeMap<String, Distribution1D>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub bayes_factor: BayesFactorConfig,
}

/// Help text describing every configuration key.
pub const CONFIG_HELP: &str = "\
Configuration files are TOML; keys may be written with dots, e.g.
  model.type = \"weibull\"
  prior.theta1.type = \"normal\"
  prior.theta1.mean = 0.0
  sampler.iterations = 20000

[model]
  type              toy | gompertz | weibull | pareto | pareto-constant | covariate
  x0                start value (gompertz 1, weibull 0.8, toy 2)
  sigma             diffusion coefficient (weibull 8, others 1)
  sigma_prior       prior for an unknown sigma, e.g. {type = \"exponential\", mean = 1}
  grouped           one diffusion per group label, shared parameters (false)
  lambda, x_lambda  time origin and start value of the pareto models (1, 1)
  start_covariates, drift_covariates   covariate names of the covariate model
[prior.<parameter>] type = normal {mean, var} | uniform {lo, hi} |
                    exponential {mean} | beta {a, b}
  defaults: toy theta1 N(-1.4, 5), theta2 N(-1, 5); gompertz theta N(0, 5);
  weibull theta1 N(0, 5), theta2 U[0, 1]; pareto theta N(1, 1);
  covariate eta/start/drift N(0, 5), theta2 U[0, 1]
[sampler]  iterations (10000), burn_in (1000), thin (1), dt (0.01),
           block_length (0.2), horizon (last observation),
           parametrization centered | pnc | ncp (pnc), seed (0),
           sigma_step (0.1), output_nodes (100), record_curves (true),
           initial_theta (prior means)
[data]     path (CSV file) or embedded = \"leukemia\" (weeks);
           time_divisor (1), time_unit
[output]   dir (out), plot (true), band_level (0.9), chains (1)
[simulate] n per diffusion (200), cutoff (0.9), theta (prior means),
           dt (0.001), groups (labels for grouped models)
[bayes_factor] samples (100000), dt (0.01)
";

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate().map_err(|e| Error::Config(e.to_string()))?;
        for (name, d) in &self.prior {
            d.validate().map_err(|e| Error::Config(format!("prior.{name}: {e}")))?;
        }
        if let Some(p) = &self.model.sigma_prior {
            p.validate().map_err(|e| Error::Config(format!("model.sigma_prior: {e}")))?;
        }
        if self.data.path.is_some() && self.data.embedded.is_some() {
            return Err(Error::Config("data.path and data.embedded are exclusive".into()));
        }
        if let Some(e) = &self.data.embedded {
            if e != "leukemia" {
                return Err(Error::Config(format!("unknown embedded dataset '{e}'")));
            }
        }
        if let Some(d) = self.data.time_divisor {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config("data.time_divisor must be positive".into()));
            }
        }
        let o = &self.output;
        if !(o.band_level > 0.0 && o.band_level < 1.0) {
            return Err(Error::Config("output.band_level must be in (0, 1)".into()));
        }
        if o.chains == 0 {
            return Err(Error::Config("output.chains must be at least 1".into()));
        }
        let s = &self.simulate;
        if s.n == 0 || !(s.cutoff > 0.0 && s.cutoff.is_finite()) || !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(Error::Config("simulate needs n >= 1 and positive cutoff and dt".into()));
        }
        let b = &self.bayes_factor;
        if b.samples < 2 || !(b.dt > 0.0 && b.dt.is_finite()) {
            return Err(Error::Config("bayes_factor needs samples >= 2 and a positive dt".into()));
        }
        if self.model.kind != ModelKind::Covariate {
            self.build_model(None)?;
        }
        Ok(())
    }

    /// Reads the configured dataset, rescaled by the time divisor.
    pub fn load_data(&self) -> Result<Option<SurvivalDataset>> {
        let raw = match (&self.data.path, &self.data.embedded) {
            (Some(p), _) => load_dataset_csv(p)?,
            (None, Some(_)) => embedded_leukemia().weeks,
            (None, None) => return Ok(None),
        };
        let unit = self.data.time_unit.clone().unwrap_or_else(|| raw.time_unit.clone());
        Ok(Some(match self.data.time_divisor {
            Some(d) => raw.rescaled(d, &unit)?,
            None => SurvivalDataset::with_covariates(raw.observations().to_vec(), raw.covariate_names().to_vec(), &unit)?,
        }))
    }

    fn prior_for(&self, name: &str, default: Distribution1D) -> Distribution1D {
        self.prior.get(name).copied().unwrap_or(default)
    }

    fn check_prior_names(&self, names: &[String]) -> Result<()> {
        match self.prior.keys().find(|k| !names.contains(k)) {
            Some(k) => Err(Error::Config(format!(
                "prior.{k} does not name a parameter (expected one of {})",
                names.join(", ")
            ))),
            None => Ok(()),
        }
    }

    /// Builds the configured model. Covariate models need the data to fix
    /// their cells and centering constants.
    pub fn build_model(&self, data: Option<&SurvivalDataset>) -> Result<ModelInstance> {
        let m = &self.model;
        let normal = |mean: f64, var: f64| Distribution1D::Normal { mean, var };
        let unit = Distribution1D::Uniform { lo: 0.0, hi: 1.0 };
        let wrap = |e: Error| Error::Config(format!("model: {e}"));
        let mut model = match m.kind {
            ModelKind::Toy => {
                let mut t = toy_model();
                if !self.prior.is_empty() {
                    t.prior = PriorSpec::independent(vec![
                        self.prior_for("theta1", normal(-1.4, 5.0)),
                        self.prior_for("theta2", normal(-1.0, 5.0)),
                    ])
                    .map_err(wrap)?;
                    for i in 0..2 {
                        if !matches!(t.prior.marginal(i), Some(Distribution1D::Normal { .. })) {
                            t.updates[i] = crate::model::ParamUpdate::PriorIndependence;
                        }
                    }
                }
                if let Some(x0) = m.x0 {
                    t.start = StartSpec::Fixed(x0);
                }
                if let Some(s) = m.sigma {
                    t.sigma = SigmaSpec::Known(s);
                }
                t
            }
            ModelKind::Gompertz => gompertz_perturbation(
                self.prior_for("theta", normal(0.0, 5.0)),
                m.sigma.unwrap_or(1.0),
                m.x0.unwrap_or(1.0),
            )
            .map_err(wrap)?,
            ModelKind::Weibull => weibull_perturbation(
                self.prior_for("theta1", normal(0.0, 5.0)),
                self.prior_for("theta2", unit),
                m.sigma.unwrap_or(8.0),
                m.x0.unwrap_or(0.8),
            )
            .map_err(wrap)?,
            ModelKind::Pareto | ModelKind::ParetoConstant => {
                let build = if m.kind == ModelKind::Pareto {
                    pareto_perturbation
                } else {
                    pareto_constant_coefficient
                };
                build(
                    self.prior_for("theta", normal(1.0, 1.0)),
                    m.sigma.unwrap_or(1.0),
                    m.x_lambda.unwrap_or(1.0),
                    m.lambda.unwrap_or(1.0),
                )
                .map_err(wrap)?
            }
            ModelKind::Covariate => {
                let data = data.ok_or_else(|| Error::Config("the covariate model needs a dataset".into()))?;
                let start: Vec<&str> = m.start_covariates.iter().map(String::as_str).collect();
                let drift: Vec<&str> = m.drift_covariates.iter().map(String::as_str).collect();
                let spec = CovariateModelSpec::from_data(data, &start, &drift).map_err(wrap)?;
                let names = covariate_parameter_names(&spec);
                let priors = names
                    .iter()
                    .map(|n| self.prior_for(n, if n == "theta2" { unit } else { normal(0.0, 5.0) }))
                    .collect();
                let prior = PriorSpec::independent(priors).map_err(wrap)?;
                build_covariate_model(spec, prior, m.sigma.unwrap_or(1.0)).map_err(wrap)?
            }
        };
        self.check_prior_names(model.drift.names())?;
        if let Some(prior) = m.sigma_prior {
            let initial = m.sigma.unwrap_or_else(|| prior.mean());
            model = model.with_sigma(SigmaSpec::Unknown { prior, initial });
        }
        if m.grouped {
            if m.kind == ModelKind::Covariate {
                return Err(Error::Config("model.grouped does not apply to the covariate model".into()));
            }
            model = model.grouped();
        }
        model.validate().map_err(wrap)?;
        Ok(model)
    }

    pub fn prior_mc_settings(&self) -> PriorMcSettings {
        PriorMcSettings {
            n_samples: self.bayes_factor.samples,
            dt: self.bayes_factor.dt,
            seed: self.sampler.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grouping;

    #[test]
    fn dotted_keys() {
        let cfg = RunConfig::from_toml(
            r#"
model.type = "weibull"
model.grouped = true
prior.theta1.type = "normal"
prior.theta1.mean = 0.0
prior.theta1.var = 5.0
sampler.iterations = 500
sampler.burn_in = 100
sampler.parametrization = "ncp"
data.embedded = "leukemia"
data.time_divisor = 52
"#,
        )
        .unwrap();
        assert_eq!(cfg.sampler.iterations, 500);
        let data = cfg.load_data().unwrap().unwrap();
        assert_eq!(data.time_unit, "weeks");
        assert_eq!(data.observations()[0].time, 6.0 / 52.0);
        let model = cfg.build_model(Some(&data)).unwrap();
        assert_eq!(model.grouping, Grouping::ByGroup);
        assert_eq!(model.sigma, SigmaSpec::Known(8.0));
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "model.type = \"weibull\"\nsampler.iterations = 10\nsampler.burn_in = 20\n",
            "model.type = \"nope\"\n",
            "model.type = \"toy\"\nsampler.bogus = 1\n",
            "model.type = \"toy\"\nprior.beta.type = \"normal\"\nprior.beta.mean = 0\nprior.beta.var = 1\n",
            "model.type = \"gompertz\"\nprior.theta.type = \"normal\"\nprior.theta.mean = 0\nprior.theta.var = -1\n",
            "model.type = \"weibull\"\nprior.theta2.type = \"uniform\"\nprior.theta2.lo = 0\nprior.theta2.hi = 2\n",
            "model.type = \"toy\"\ndata.embedded = \"iris\"\n",
            "model.type = \"toy\"\noutput.band_level = 1.5\n",
            "model.type = \"toy\"\nsampler.dt = 0.1\nsampler.block_length = 0.1\n",
        ] {
            let e = RunConfig::from_toml(text).unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{text}: {e:?}");
        }
    }

    #[test]
    fn unknown_sigma() {
        let cfg = RunConfig::from_toml(
            "model.type = \"toy\"\nmodel.sigma_prior = { type = \"exponential\", mean = 1.0 }\n",
        )
        .unwrap();
        let m = cfg.build_model(None).unwrap();
        assert!(m.sigma.is_unknown());
        assert_eq!(m.sigma.initial(), 1.0);
    }

    #[test]
    fn help_lists_every_section() {
        for key in ["[model]", "[sampler]", "[data]", "[output]", "[simulate]", "[bayes_factor]", "[prior."] {
            assert!(CONFIG_HELP.contains(key), "{key}");
        }
    }
}
