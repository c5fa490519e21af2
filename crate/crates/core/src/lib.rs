//! Stochastic-gradient estimators for Bellman residual minimization.
//!
//! Minimizing the squared Bellman residual with SGD needs two independent
//! next-state samples from the same state-action pair. This crate implements
//! the family of gradient estimators that deal with that requirement in
//! different ways, together with the environments, approximators, optimizers,
//! exact oracles and experiment harness used to compare them:
//!
//! * `us`: uncorrelated sampling, a genuine second draw from the simulator;
//! * `sc`: sample cloning, reusing the observed next state;
//! * `bff` / `nbff`: borrowing from the future, rebuilding a second sample from
//!   the next one (or n) state differences along the trajectory;
//! * `pd`: the primal-dual saddle-point formulation.
//!
//! Estimators are selected by name through [`estimators::EstimatorRegistry`].

pub mod approx;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod mdp;
pub mod optim;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
