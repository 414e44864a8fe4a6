//! Survival analysis with latent diffusion health processes.
//!
//! A subject's unobserved health follows a scalar SDE; the hazard of the
//! terminal event is a function of the current health value. Posterior
//! inference over drift parameters and the latent path uses a
//! Gibbs sampler with Brownian-bridge block updates.

pub mod error;
pub mod exec;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod path;
pub mod summary;
pub mod survival;

pub use error::{Error, Result};
