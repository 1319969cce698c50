//! Stacked matrix form of one TD step on `Theta = [omega; theta]`.
//!
//! Used as an independent route to the learners: the explicit step is
//! `Theta + beta (A Theta + b)` and the implicit step is
//! `Theta + beta D (A Theta + b)`.

use nalgebra::{DMatrix, DVector};

use super::learner::{LearnerState, Transition};

#[derive(Clone, Debug)]
pub struct CanonicalStep {
    pub a_matrix: DMatrix<f64>,
    pub b_vector: DVector<f64>,
    pub d_matrix: DMatrix<f64>,
    pub gamma_t: f64,
    pub beta: f64,
}

/// Builds `A(X_t)`, `b(X_t)`, `D_t` and `gamma_t` from a transition and the
/// already-updated trace `z_t`.
pub fn canonical_form(
    tr: &Transition<'_>,
    trace: &DVector<f64>,
    beta: f64,
    c_alpha: f64,
    lambda: f64,
) -> CanonicalStep {
    let d = trace.len();
    let mut a = DMatrix::zeros(d + 1, d + 1);
    a[(0, 0)] = -c_alpha;
    let diff = tr.phi_next - tr.phi;
    a.view_mut((1, 0), (d, 1)).copy_from(&(-trace));
    a.view_mut((1, 1), (d, d)).copy_from(&(trace * diff.transpose()));

    let mut b = DVector::zeros(d + 1);
    b[0] = c_alpha * tr.reward;
    b.rows_mut(1, d).copy_from(&(trace * tr.reward));

    let mut dm = DMatrix::identity(d + 1, d + 1) / (1.0 + beta * trace.norm_squared());
    dm[(0, 0)] = 1.0 / (1.0 + c_alpha * beta);

    let gap2 = (1.0 - lambda).powi(2);
    let gamma_t = (1.0 / (1.0 + c_alpha * beta)).min(gap2 / (gap2 + beta));

    CanonicalStep {
        a_matrix: a,
        b_vector: b,
        d_matrix: dm,
        gamma_t,
        beta,
    }
}

impl CanonicalStep {
    pub fn drift(&self, stacked: &DVector<f64>) -> DVector<f64> {
        &self.a_matrix * stacked + &self.b_vector
    }

    pub fn explicit_step(&self, stacked: &DVector<f64>) -> DVector<f64> {
        stacked + self.drift(stacked) * self.beta
    }

    pub fn implicit_step(&self, stacked: &DVector<f64>) -> DVector<f64> {
        stacked + &self.d_matrix * self.drift(stacked) * self.beta
    }
}

/// Uniform bound on the spectral norm of `A(X_t)` for features of norm at
/// most one.
pub fn a_max(c_alpha: f64, lambda: f64) -> f64 {
    (c_alpha * c_alpha + 5.0 / (1.0 - lambda).powi(2)).sqrt()
}

/// Uniform bound on the norm of `b(X_t)` for rewards in `[0, 1]`.
pub fn b_max(c_alpha: f64, lambda: f64) -> f64 {
    (c_alpha * c_alpha + 1.0 / (1.0 - lambda).powi(2)).sqrt()
}

pub fn stack(state: &LearnerState) -> DVector<f64> {
    let d = state.dim();
    let mut out = DVector::zeros(d + 1);
    out[0] = state.omega_hat;
    out.rows_mut(1, d).copy_from(&state.theta_hat);
    out
}
