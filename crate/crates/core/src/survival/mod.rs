//! Hazards of a latent path, censored likelihoods, survival curves,
//! event-time simulation and the Kaplan–Meier estimator.

mod curves;
mod data;
mod event;
mod hazard;
mod km;
mod likelihood;

pub use curves::{density_curve, hazard_curve, survival_curve, Curve};
pub use data::{Observation, Status, SurvivalDataset};
pub use event::{event_time_for_barrier, sample_event_time, EventDraw};
pub use hazard::HazardSpec;
pub use km::{kaplan_meier, KaplanMeier};
pub use likelihood::{cumulative_hazard, log_likelihood};

pub(crate) use curves::curve_triplet;
pub(crate) use likelihood::{loglik_delta, loglik_values, ObservationIndex};
