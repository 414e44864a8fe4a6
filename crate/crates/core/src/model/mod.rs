//! Drift specifications, priors and assembled survival models.

mod drift;
mod models;
mod prior;
mod simulate;

pub use drift::{BasisTerm, CovariateFn, DriftForm, DriftSpec, LinearDriftBuilder, StateFn};
pub use models::{
    build_covariate_model, covariate_parameter_names, gompertz_perturbation, log_prior,
    pareto_constant_coefficient, pareto_perturbation, toy_model, weibull_perturbation,
    CovariateModelSpec, Grouping, ModelInstance, ParamUpdate, StartFn, StartSpec,
};
pub use prior::{Distribution1D, PriorBlock, PriorSpec, SigmaSpec};
pub use simulate::{simulate_dataset, SimulatedData, SimulationDesign};
