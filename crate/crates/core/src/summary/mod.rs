//! Posterior curve summaries, chain diagnostics and Bayes factors.

mod bayes;
mod curves;
mod diag;
mod hpd;

pub use bayes::{bayes_factor_prior_mc, marginal_likelihood_prior_mc, BayesFactor, MarginalLikelihood, PriorMcSettings};
pub use curves::{curve_estimates, curve_posterior_mean, CurveEstimate};
pub use diag::{acf_ess, autocorrelation, ks_pvalue, ks_statistic, Diagnostics};
pub use hpd::{hpd_interval, pointwise_hpd_band, MIN_HPD_DRAWS};
