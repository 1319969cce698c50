//! Average-reward TD(lambda) policy evaluation with linear function
//! approximation.
//!
//! The crate provides the standard learner, the implicit learner (whose
//! closed-form fixed-point update shrinks its step by the trace norm), and
//! a projected implicit learner; exact oracle solvers for the loss; the
//! random MRP, Boyan chain, access-control and pendulum environments;
//! SARSA(lambda) control; and a deterministic, parallel sweep harness.

pub mod control;
pub mod envs;
pub mod error;
pub mod features;
pub mod harness;
pub mod markov;
pub mod td;

pub use error::{Error, Result};
