use rand::Rng;

use super::ControlEnv;
use crate::error::{Error, Result};

pub const ACCEPT: usize = 0;
pub const REJECT: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessControlState {
    pub free_servers: usize,
    /// Class of the waiting customer, in `1..=classes`.
    pub customer_class: usize,
}

/// Access-control queuing task: accept or reject the arriving customer;
/// busy servers free up independently with probability `p` per step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccessControl {
    pub servers: usize,
    pub classes: usize,
    pub p: f64,
}

impl Default for AccessControl {
    fn default() -> Self {
        AccessControl {
            servers: 10,
            classes: 4,
            p: 0.06,
        }
    }
}

/// Inverse-transform draw from Binomial(trials, p).
fn binomial<R: Rng + ?Sized>(trials: usize, p: f64, rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let q = 1.0 - p;
    let mut pmf = q.powi(trials as i32);
    let mut cdf = pmf;
    let mut k = 0;
    while u >= cdf && k < trials {
        pmf *= (trials - k) as f64 / (k + 1) as f64 * p / q;
        k += 1;
        cdf += pmf;
    }
    k
}

impl AccessControl {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.servers == 0 {
            problems.push("servers must be at least 1".to_string());
        }
        if self.classes < 2 {
            problems.push("classes must be at least 2".to_string());
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            problems.push(format!("p = {} outside (0, 1)", self.p));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn reward_for(&self, class: usize) -> f64 {
        2f64.powi(class as i32) / 2f64.powi(self.classes as i32)
    }

    pub fn step_with<R: Rng + ?Sized>(
        &self,
        state: &AccessControlState,
        action: usize,
        rng: &mut R,
    ) -> Result<(AccessControlState, f64)> {
        let (after_action, reward) = match action {
            ACCEPT if state.free_servers == 0 => {
                return Err(Error::IllegalAction(
                    "accept with no free servers".into(),
                ))
            }
            ACCEPT => (state.free_servers - 1, self.reward_for(state.customer_class)),
            REJECT => (state.free_servers, 0.0),
            other => {
                return Err(Error::IndexOutOfRange {
                    index: other,
                    len: 2,
                })
            }
        };
        let busy = self.servers - after_action;
        let released = binomial(busy, self.p, rng);
        let next = AccessControlState {
            free_servers: (after_action + released).min(self.servers),
            customer_class: rng.random_range(1..=self.classes),
        };
        Ok((next, reward))
    }
}

impl ControlEnv for AccessControl {
    type State = AccessControlState;

    fn n_actions(&self) -> usize {
        2
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> AccessControlState {
        AccessControlState {
            free_servers: self.servers,
            customer_class: rng.random_range(1..=self.classes),
        }
    }

    fn feasible(&self, state: &AccessControlState) -> Vec<bool> {
        vec![state.free_servers > 0, true]
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &AccessControlState,
        action: usize,
        rng: &mut R,
    ) -> Result<(AccessControlState, f64)> {
        self.step_with(state, action, rng)
    }

    /// Free servers over `n` and class mapped to `(c - 1) / (C - 1)`.
    fn observe(&self, state: &AccessControlState) -> Vec<f64> {
        vec![
            state.free_servers as f64 / self.servers as f64,
            (state.customer_class - 1) as f64 / (self.classes - 1) as f64,
        ]
    }
}
