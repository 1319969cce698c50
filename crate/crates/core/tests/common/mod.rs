#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use tdlab::td::{LearnerState, Transition};

/// Uniform direction with norm uniform on `[0, 1]`.
pub fn ball_vector<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let n = v.norm().max(1e-12);
    v * (rng.random::<f64>() / n)
}

/// A random sequence of in-ball features with the trace they induce, ending
/// in one transition. Returns `(phi, phi_next, reward, trace_before)`.
pub struct RandomStep {
    pub phi: DVector<f64>,
    pub phi_next: DVector<f64>,
    pub reward: f64,
    pub trace_before: DVector<f64>,
    pub omega: f64,
    pub theta: DVector<f64>,
}

pub fn random_step<R: Rng>(d: usize, lambda: f64, history: usize, rng: &mut R) -> RandomStep {
    let mut trace = DVector::zeros(d);
    for _ in 0..history {
        trace = trace * lambda + ball_vector(d, rng);
    }
    RandomStep {
        phi: ball_vector(d, rng),
        phi_next: ball_vector(d, rng),
        reward: rng.random(),
        trace_before: trace,
        omega: rng.random::<f64>() * 2.0 - 1.0,
        theta: DVector::from_fn(d, |_, _| rng.random::<f64>() * 10.0 - 5.0),
    }
}

impl RandomStep {
    pub fn transition(&self) -> Transition<'_> {
        Transition {
            phi: &self.phi,
            reward: self.reward,
            phi_next: &self.phi_next,
        }
    }

    pub fn state(&self) -> LearnerState {
        let mut s = LearnerState::new(self.omega, self.theta.clone());
        s.trace = self.trace_before.clone();
        s
    }
}

/// Solves the implicit recursions for `(omega_{t+1}, theta_{t+1})` as a
/// dense linear system:
/// `omega' = omega + c beta (R - omega')` and
/// `theta' = theta + beta (R - omega + phi'.theta + lambda z_{t-1}.theta - z_t.theta') z_t`.
pub fn implicit_oracle(step: &RandomStep, beta: f64, c_alpha: f64, lambda: f64) -> (f64, DVector<f64>) {
    let d = step.phi.len();
    let z = &step.trace_before * lambda + &step.phi;
    let omega = (step.omega + c_alpha * beta * step.reward) / (1.0 + c_alpha * beta);
    let lhs = DMatrix::identity(d, d) + &z * z.transpose() * beta;
    let scalar = step.reward - step.omega
        + step.phi_next.dot(&step.theta)
        + lambda * step.trace_before.dot(&step.theta);
    let rhs = &step.theta + &z * (beta * scalar);
    let theta = lhs.lu().solve(&rhs).expect("I + beta z z^T is positive definite");
    (omega, theta)
}

/// Largest absolute residual of the implicit recursions at a candidate.
pub fn implicit_residual(
    step: &RandomStep,
    beta: f64,
    c_alpha: f64,
    lambda: f64,
    omega_next: f64,
    theta_next: &DVector<f64>,
) -> f64 {
    let z = &step.trace_before * lambda + &step.phi;
    let r_omega = omega_next - step.omega - c_alpha * beta * (step.reward - omega_next);
    let scalar = step.reward - step.omega + step.phi_next.dot(&step.theta)
        + lambda * step.trace_before.dot(&step.theta)
        - z.dot(theta_next);
    let r_theta = theta_next - &step.theta - &z * (beta * scalar);
    r_omega.abs().max(r_theta.amax())
}
