use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Distribution1D, DriftSpec, PriorSpec, SigmaSpec};
use crate::error::{Error, Result};
use crate::survival::{HazardSpec, SurvivalDataset};

/// Start value as a function of `(z, theta)`.
pub type StartFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum StartSpec {
    Fixed(f64),
    Covariate(StartFn),
}

impl fmt::Debug for StartSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(x) => write!(f, "Fixed({x})"),
            Self::Covariate(_) => write!(f, "Covariate"),
        }
    }
}

/// How one parameter is refreshed inside the Gibbs sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamUpdate {
    /// Joint Gaussian draw with the other conjugate coefficients.
    Conjugate,
    /// Independence sampler proposing from the parameter's prior.
    PriorIndependence,
    Independence(Distribution1D),
    /// Gaussian random walk with the given step.
    RandomWalk { step: f64 },
}

/// How observations are mapped to latent diffusions.
#[derive(Debug, Clone, PartialEq)]
pub enum Grouping {
    /// One diffusion for all observations.
    Pooled,
    /// One independent diffusion per group label, shared parameters.
    ByGroup,
    /// One diffusion per covariate cell, all driven by the same noise.
    Covariates(CovariateModelSpec),
}

/// Covariate cells and the centering constants of the intercepts.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateModelSpec {
    /// Covariates used by the model, in the order of the cell vectors.
    pub names: Vec<String>,
    /// Positions in `names` that shift the start value.
    pub start_covariates: Vec<usize>,
    /// Positions in `names` that scale the drift.
    pub drift_covariates: Vec<usize>,
    /// Sample means of each covariate, frozen at build time.
    pub centers: Vec<f64>,
    /// Distinct covariate vectors present in the data.
    pub cells: Vec<Vec<f64>>,
}

impl CovariateModelSpec {
    /// Enumerates the cells and sample shares of the named dataset columns.
    pub fn from_data(data: &SurvivalDataset, start: &[&str], drift: &[&str]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        for n in start.iter().chain(drift) {
            if !names.iter().any(|m| m == n) {
                names.push(n.to_string());
            }
        }
        let columns: Vec<usize> = names
            .iter()
            .map(|n| {
                data.covariate_names()
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::InvalidArgument(format!("dataset has no covariate '{n}'")))
            })
            .collect::<Result<_>>()?;
        let pos = |n: &&str| names.iter().position(|m| m == n).expect("collected");
        let mut cells: Vec<Vec<f64>> = Vec::new();
        let mut centers = vec![0.0; names.len()];
        for o in data.observations() {
            let z: Vec<f64> = columns.iter().map(|&c| o.covariates[c]).collect();
            for (acc, v) in centers.iter_mut().zip(&z) {
                *acc += v;
            }
            if !cells.contains(&z) {
                cells.push(z);
            }
        }
        let n = data.len().max(1) as f64;
        centers.iter_mut().for_each(|c| *c /= n);
        cells.sort_by(|a, b| a.partial_cmp(b).expect("finite covariates"));
        Ok(Self {
            start_covariates: start.iter().map(pos).collect(),
            drift_covariates: drift.iter().map(pos).collect(),
            names,
            centers,
            cells,
        })
    }

    /// Projection of a dataset covariate row onto this model's covariates.
    pub fn project(&self, data_names: &[String], row: &[f64]) -> Result<Vec<f64>> {
        self.names
            .iter()
            .map(|n| {
                data_names
                    .iter()
                    .position(|c| c == n)
                    .map(|c| row[c])
                    .ok_or_else(|| Error::InvalidArgument(format!("dataset has no covariate '{n}'")))
            })
            .collect()
    }

    pub fn cell_of(&self, z: &[f64]) -> Result<usize> {
        self.cells
            .iter()
            .position(|c| c.as_slice() == z)
            .ok_or_else(|| Error::InvalidArgument(format!("covariate vector {z:?} matches no cell")))
    }
}

/// Fully assembled latent diffusion survival model.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub name: String,
    pub drift: DriftSpec,
    pub hazard: HazardSpec,
    pub sigma: SigmaSpec,
    pub start: StartSpec,
    /// Time at which the diffusion starts.
    pub origin: f64,
    pub prior: PriorSpec,
    pub updates: Vec<ParamUpdate>,
    pub grouping: Grouping,
    /// Set for models whose paths blow up in finite time; such models are
    /// constructible for simulation experiments but refused by the sampler.
    pub explosive: bool,
}

impl ModelInstance {
    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    /// Parameters refreshed jointly by the Gaussian conditional.
    pub fn conjugate_block(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.updates[i] == ParamUpdate::Conjugate)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.prior.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.prior.dim(),
            });
        }
        if self.updates.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.updates.len(),
            });
        }
        self.sigma.validate()?;
        if !self.origin.is_finite() {
            return Err(Error::InvalidArgument("non-finite time origin".into()));
        }
        if let StartSpec::Fixed(x0) = self.start {
            if !x0.is_finite() {
                return Err(Error::InvalidArgument("non-finite start value".into()));
            }
        }
        let conj = self.conjugate_block();
        if !conj.is_empty() {
            let linear = self.drift.linear_coefficients().unwrap_or_default();
            if let Some(&i) = conj.iter().find(|i| !linear.contains(i)) {
                return Err(Error::InvalidArgument(format!(
                    "parameter '{}' does not enter the drift linearly",
                    self.drift.names()[i]
                )));
            }
            if self.prior.gaussian_subset(&conj).is_none() {
                return Err(Error::InvalidArgument(
                    "conjugate parameters need a Gaussian prior of their own".into(),
                ));
            }
        }
        for (i, u) in self.updates.iter().enumerate() {
            match *u {
                ParamUpdate::Independence(q) => q.validate()?,
                ParamUpdate::RandomWalk { step } if !(step > 0.0 && step.is_finite()) => {
                    return Err(Error::InvalidArgument(format!(
                        "random-walk step for '{}' must be positive",
                        self.drift.names()[i]
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Start value of the diffusion for covariate vector `z`.
    pub fn start_value(&self, z: &[f64], theta: &[f64]) -> f64 {
        match &self.start {
            StartSpec::Fixed(x0) => *x0,
            StartSpec::Covariate(f) => f(z, theta),
        }
    }

    /// Whether the start value moves with the parameters.
    pub fn start_depends_on_theta(&self) -> bool {
        matches!(self.start, StartSpec::Covariate(_))
    }

    /// Separate diffusions per group label, sharing the parameters.
    pub fn grouped(mut self) -> Self {
        self.grouping = Grouping::ByGroup;
        self
    }

    pub fn with_sigma(mut self, sigma: SigmaSpec) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_update(mut self, index: usize, update: ParamUpdate) -> Self {
        self.updates[index] = update;
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

fn default_update(prior: &Distribution1D) -> ParamUpdate {
    match prior {
        Distribution1D::Normal { .. } => ParamUpdate::Conjugate,
        _ => ParamUpdate::PriorIndependence,
    }
}

/// `dX = theta X dt + sigma dB`, hazard `|x|`.
pub fn gompertz_perturbation(theta_prior: Distribution1D, sigma: f64, x0: f64) -> Result<ModelInstance> {
    positive("x0", x0)?;
    positive("sigma", sigma)?;
    let drift = DriftSpec::linear_basis().term("theta", |x, _| x).build();
    Ok(ModelInstance {
        name: "gompertz".into(),
        drift,
        hazard: HazardSpec::Abs,
        sigma: SigmaSpec::Known(sigma),
        start: StartSpec::Fixed(x0),
        origin: 0.0,
        prior: PriorSpec::independent(vec![theta_prior])?,
        updates: vec![default_update(&theta_prior)],
        grouping: Grouping::Pooled,
        explosive: false,
    })
}

/// `sign(x) |x|^p` with `sign(0) = 0`.
#[inline]
pub(crate) fn signed_power(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(p)
    }
}

/// `dX = theta1 sign(X) |X|^theta2 dt + sigma dB`, hazard `|x|`. The
/// exponent is refreshed by an independence sampler with a Beta(1/2, 1/2)
/// proposal.
pub fn weibull_perturbation(
    theta1_prior: Distribution1D,
    theta2_prior: Distribution1D,
    sigma: f64,
    x0: f64,
) -> Result<ModelInstance> {
    positive("x0", x0)?;
    positive("sigma", sigma)?;
    theta2_prior.validate()?;
    let (lo, hi) = theta2_prior.support();
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::InvalidArgument(
            "exponent prior must be supported inside [0, 1]".into(),
        ));
    }
    let drift = DriftSpec::linear_basis()
        .term("theta1", |x, th| signed_power(x, th[1]))
        .param("theta2")
        .build();
    Ok(ModelInstance {
        name: "weibull".into(),
        drift,
        hazard: HazardSpec::Abs,
        sigma: SigmaSpec::Known(sigma),
        start: StartSpec::Fixed(x0),
        origin: 0.0,
        prior: PriorSpec::independent(vec![theta1_prior, theta2_prior])?,
        updates: vec![
            default_update(&theta1_prior),
            ParamUpdate::Independence(Distribution1D::Beta { a: 0.5, b: 0.5 }),
        ],
        grouping: Grouping::Pooled,
        explosive: false,
    })
}

/// `dX = -theta X^2 dt + sigma X dB` from `X(lambda) = x_lambda`, carried in
/// the unit-coefficient state `y = ln(x) / sigma`:
/// `dY = (-(theta/sigma) e^{sigma Y} - sigma/2) dt + dB`, hazard `e^{sigma y}`
/// (the identity hazard on the original scale).
pub fn pareto_perturbation(
    theta_prior: Distribution1D,
    sigma: f64,
    x_lambda: f64,
    lambda: f64,
) -> Result<ModelInstance> {
    positive("x_lambda", x_lambda)?;
    positive("lambda", lambda)?;
    positive("sigma", sigma)?;
    let drift = DriftSpec::linear_basis()
        .term("theta", move |y, _| -(sigma * y).exp() / sigma)
        .offset(move |_, _| -0.5 * sigma)
        .build();
    Ok(ModelInstance {
        name: "pareto".into(),
        drift,
        hazard: HazardSpec::ExpScaled { scale: sigma },
        sigma: SigmaSpec::Known(1.0),
        start: StartSpec::Fixed(x_lambda.ln() / sigma),
        origin: lambda,
        prior: PriorSpec::independent(vec![theta_prior])?,
        updates: vec![default_update(&theta_prior)],
        grouping: Grouping::Pooled,
        explosive: false,
    })
}

/// `dX = -theta X^2 dt + sigma dB`, hazard `max(x, 0)`. Paths explode in
/// finite time, so the sampler refuses this model.
pub fn pareto_constant_coefficient(
    theta_prior: Distribution1D,
    sigma: f64,
    x_lambda: f64,
    lambda: f64,
) -> Result<ModelInstance> {
    positive("x_lambda", x_lambda)?;
    positive("lambda", lambda)?;
    positive("sigma", sigma)?;
    let drift = DriftSpec::linear_basis().term("theta", |x, _| -x * x).build();
    Ok(ModelInstance {
        name: "pareto-constant".into(),
        drift,
        hazard: HazardSpec::Identity,
        sigma: SigmaSpec::Known(sigma),
        start: StartSpec::Fixed(x_lambda),
        origin: lambda,
        prior: PriorSpec::independent(vec![theta_prior])?,
        updates: vec![default_update(&theta_prior)],
        grouping: Grouping::Pooled,
        explosive: true,
    })
}

/// `dX = (theta1 sin X + theta2) dt + dB`, `X(0) = 2`, hazard `x^2`, with a
/// Gaussian prior of mean (-1.4, -1) and precision diag(1/5, 1/5).
pub fn toy_model() -> ModelInstance {
    let drift = DriftSpec::linear_basis()
        .term("theta1", |x, _| x.sin())
        .term("theta2", |_, _| 1.0)
        .build();
    let prior = PriorSpec::gaussian(
        vec![-1.4, -1.0],
        DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.2]),
    )
    .expect("valid toy prior");
    ModelInstance {
        name: "toy".into(),
        drift,
        hazard: HazardSpec::Square,
        sigma: SigmaSpec::Known(1.0),
        start: StartSpec::Fixed(2.0),
        origin: 0.0,
        prior,
        updates: vec![ParamUpdate::Conjugate, ParamUpdate::Conjugate],
        grouping: Grouping::Pooled,
        explosive: false,
    }
}

/// Names of the parameters of [`build_covariate_model`], in order.
pub fn covariate_parameter_names(spec: &CovariateModelSpec) -> Vec<String> {
    let mut names = vec!["eta00".to_string()];
    names.extend(spec.start_covariates.iter().map(|&c| format!("start_{}", spec.names[c])));
    names.push("eta10".into());
    names.extend(spec.drift_covariates.iter().map(|&c| format!("drift_{}", spec.names[c])));
    names.push("theta2".into());
    names
}

/// Weibull-type model with covariates entering the start value and the
/// drift scale through centered log-linear predictors:
///
/// `X(0) = exp(eta00 + sum_c a_c (z_c - p_c))`,
/// `dX = exp(eta10 + sum_c b_c (z_c - p_c)) sign(X) |X|^theta2 dt + sigma dB`,
///
/// where `p_c` are the sample means frozen in `spec`. Parameters are ordered
/// as in [`covariate_parameter_names`]; all are refreshed by independence
/// samplers proposing from their priors.
pub fn build_covariate_model(spec: CovariateModelSpec, prior: PriorSpec, sigma: f64) -> Result<ModelInstance> {
    positive("sigma", sigma)?;
    if spec.cells.is_empty() {
        return Err(Error::InvalidArgument("covariate model needs at least one cell".into()));
    }
    let names = covariate_parameter_names(&spec);
    let d = names.len();
    if prior.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: prior.dim(),
        });
    }
    let n_start = spec.start_covariates.len();
    let drift_offset = n_start + 1;
    let exponent = d - 1;

    let start_cols = spec.start_covariates.clone();
    let centers = spec.centers.clone();
    let start: StartFn = Arc::new(move |z: &[f64], th: &[f64]| {
        let mut eta = th[0];
        for (k, &c) in start_cols.iter().enumerate() {
            eta += th[1 + k] * (z[c] - centers[c]);
        }
        eta.exp()
    });

    let drift_cols = spec.drift_covariates.clone();
    let centers = spec.centers.clone();
    let f = Arc::new(move |x: f64, z: &[f64], th: &[f64]| {
        let mut eta = th[drift_offset];
        for (k, &c) in drift_cols.iter().enumerate() {
            eta += th[drift_offset + 1 + k] * (z[c] - centers[c]);
        }
        eta.exp() * signed_power(x, th[exponent])
    });
    let first = spec.cells[0].clone();
    let drift = DriftSpec::covariate(names, f, first);

    Ok(ModelInstance {
        name: "covariate-weibull".into(),
        drift,
        hazard: HazardSpec::Abs,
        sigma: SigmaSpec::Known(sigma),
        start: StartSpec::Covariate(start),
        origin: 0.0,
        prior,
        updates: vec![ParamUpdate::PriorIndependence; d],
        grouping: Grouping::Covariates(spec),
        explosive: false,
    })
}

/// Sum of the log prior densities of the parameters and, for models with
/// unknown diffusion coefficient, of `sigma`.
pub fn log_prior(model: &ModelInstance, theta: &[f64], sigma: Option<f64>) -> Result<f64> {
    let mut lp = model.prior.log_density(theta)?;
    if let SigmaSpec::Unknown { prior, .. } = model.sigma {
        let s = sigma.ok_or_else(|| {
            Error::InvalidArgument("model has unknown sigma; a value is required".into())
        })?;
        lp += prior.logpdf(s);
    }
    Ok(lp)
}
