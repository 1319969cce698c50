//! Environments: finite chains under a fixed policy (random MRP, Boyan
//! chain) and the two control problems (access control, pendulum).

mod access;
mod boyan;
mod chain;
mod mrp;
mod pendulum;

pub use access::{AccessControl, AccessControlState, ACCEPT, REJECT};
pub use boyan::{boyan_chain, sample_boyan_policy, sample_boyan_policy_with, BOYAN_STATES};
pub use chain::{sample_transition, ChainSampler};
pub use mrp::{generate_mrp, generate_mrp_with};
pub use pendulum::{wrap_angle, Pendulum, PendulumState, PENDULUM_TORQUES};

use rand::Rng;

use crate::error::Result;

/// A continuing control problem with a finite action set.
pub trait ControlEnv {
    type State: Clone;

    fn n_actions(&self) -> usize;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// `mask[a]` is true when action `a` is allowed in `state`.
    fn feasible(&self, state: &Self::State) -> Vec<bool>;

    /// Applies `action`, returning the successor and the reward earned.
    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: usize,
        rng: &mut R,
    ) -> Result<(Self::State, f64)>;

    /// Numeric observation fed to the feature map.
    fn observe(&self, state: &Self::State) -> Vec<f64>;
}
