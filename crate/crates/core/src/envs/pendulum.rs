use std::f64::consts::PI;

use rand::Rng;

use super::ControlEnv;
use crate::error::{Error, Result};

pub const PENDULUM_TORQUES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const DT: f64 = 0.05;
const MAX_SPEED: f64 = 8.0;
const REWARD_SCALE: f64 = 16.27;

/// Angle measured from upright, in `(-pi, pi]`, and angular velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendulumState {
    pub angle: f64,
    pub angular_velocity: f64,
}

/// Maps an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// Frictionless pendulum with five discrete torques and no terminal state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pendulum;

impl Pendulum {
    pub fn reward(state: &PendulumState, torque: f64) -> f64 {
        let angle = wrap_angle(state.angle);
        -(angle * angle
            + 0.1 * state.angular_velocity * state.angular_velocity
            + 0.001 * torque * torque)
            / REWARD_SCALE
    }

    /// Semi-implicit Euler: velocity first, then angle from the new velocity.
    pub fn step_torque(state: &PendulumState, torque: f64) -> (PendulumState, f64) {
        let reward = Self::reward(state, torque);
        let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * state.angle.sin()
            + 3.0 / (MASS * LENGTH * LENGTH) * torque;
        let velocity = (state.angular_velocity + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        let next = PendulumState {
            angle: wrap_angle(state.angle + velocity * DT),
            angular_velocity: velocity,
        };
        (next, reward)
    }
}

impl ControlEnv for Pendulum {
    type State = PendulumState;

    fn n_actions(&self) -> usize {
        PENDULUM_TORQUES.len()
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> PendulumState {
        PendulumState {
            angle: wrap_angle(rng.random_range(-PI..PI)),
            angular_velocity: 0.0,
        }
    }

    fn feasible(&self, _state: &PendulumState) -> Vec<bool> {
        vec![true; PENDULUM_TORQUES.len()]
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &PendulumState,
        action: usize,
        _rng: &mut R,
    ) -> Result<(PendulumState, f64)> {
        let torque = *PENDULUM_TORQUES.get(action).ok_or(Error::IndexOutOfRange {
            index: action,
            len: PENDULUM_TORQUES.len(),
        })?;
        Ok(Self::step_torque(state, torque))
    }

    /// `(cos angle, sin angle, angular velocity)`.
    fn observe(&self, state: &PendulumState) -> Vec<f64> {
        vec![state.angle.cos(), state.angle.sin(), state.angular_velocity]
    }
}
