use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::markov::OracleSolution;

/// One observed transition `(phi(S_t), R_t, phi(S_{t+1}))`.
#[derive(Clone, Copy, Debug)]
pub struct Transition<'a> {
    pub phi: &'a DVector<f64>,
    pub reward: f64,
    pub phi_next: &'a DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Standard,
    Implicit,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Implicit => "implicit",
        }
    }
}

/// Iterates of one evaluation run: the average-reward estimate, the
/// weight estimate, and the eligibility trace (zero before the first step).
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub omega_hat: f64,
    pub theta_hat: DVector<f64>,
    pub trace: DVector<f64>,
    pub step: usize,
}

impl LearnerState {
    pub fn new(omega_hat: f64, theta_hat: DVector<f64>) -> Self {
        let d = theta_hat.len();
        LearnerState {
            omega_hat,
            theta_hat,
            trace: DVector::zeros(d),
            step: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    /// `R - omega_hat + theta_hat . (phi_next - phi)` at the current iterate.
    pub fn td_error(&self, tr: &Transition<'_>) -> f64 {
        tr.reward - self.omega_hat + self.theta_hat.dot(tr.phi_next) - self.theta_hat.dot(tr.phi)
    }

    fn check_dims(&self, tr: &Transition<'_>) -> Result<()> {
        for len in [tr.phi.len(), tr.phi_next.len()] {
            if len != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    found: len,
                });
            }
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        if self.omega_hat.is_finite() && self.theta_hat.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteUpdate { step: self.step })
        }
    }

    /// One step of the chosen variant. Returns the TD error used.
    pub fn step(
        &mut self,
        variant: Variant,
        tr: &Transition<'_>,
        beta: f64,
        c_alpha: f64,
        lambda: f64,
    ) -> Result<f64> {
        match variant {
            Variant::Standard => self.step_standard(tr, beta, c_alpha, lambda),
            Variant::Implicit => self.step_implicit(tr, beta, c_alpha, lambda),
        }
    }

    /// Standard average-reward TD(lambda):
    /// `omega += c_alpha beta (R - omega)`, `theta += beta delta z`.
    pub fn step_standard(
        &mut self,
        tr: &Transition<'_>,
        beta: f64,
        c_alpha: f64,
        lambda: f64,
    ) -> Result<f64> {
        self.check_dims(tr)?;
        // delta only involves phi, so updating the trace first is equivalent.
        self.trace *= lambda;
        self.trace += tr.phi;
        let delta = self.td_error(tr);
        self.omega_hat += c_alpha * beta * (tr.reward - self.omega_hat);
        self.theta_hat.axpy(beta * delta, &self.trace, 1.0);
        self.step += 1;
        self.check_finite()?;
        Ok(delta)
    }

    /// Implicit average-reward TD(lambda): the closed-form solution of the
    /// fixed-point recursions, which shrinks the steps to
    /// `c_alpha beta / (1 + c_alpha beta)` and `beta / (1 + beta |z|^2)`.
    pub fn step_implicit(
        &mut self,
        tr: &Transition<'_>,
        beta: f64,
        c_alpha: f64,
        lambda: f64,
    ) -> Result<f64> {
        self.check_dims(tr)?;
        self.trace *= lambda;
        self.trace += tr.phi;
        let delta = self.td_error(tr);
        let ca_beta = c_alpha * beta;
        self.omega_hat += ca_beta / (1.0 + ca_beta) * (tr.reward - self.omega_hat);
        let eff = beta / (1.0 + beta * self.trace.norm_squared());
        self.theta_hat.axpy(eff * delta, &self.trace, 1.0);
        self.step += 1;
        self.check_finite()?;
        Ok(delta)
    }

    pub fn project(&mut self, config: &ProjectionConfig) {
        match config.mode {
            ProjectionMode::None => {}
            ProjectionMode::Joint => {
                let norm = (self.omega_hat.powi(2) + self.theta_hat.norm_squared()).sqrt();
                if norm > config.r_theta {
                    let k = config.r_theta / norm;
                    self.omega_hat *= k;
                    self.theta_hat *= k;
                }
            }
            ProjectionMode::Separate => {
                self.omega_hat = self.omega_hat.clamp(-config.r_omega, config.r_omega);
                let norm = self.theta_hat.norm();
                if norm > config.r_theta {
                    self.theta_hat *= config.r_theta / norm;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProjectionMode {
    None,
    /// Rescale `(omega, theta)` jointly onto the ball of radius `r_theta`.
    Joint,
    /// Clip `omega` to `[-r_omega, r_omega]` and `theta` to the
    /// `r_theta` ball independently.
    Separate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionConfig {
    pub mode: ProjectionMode,
    pub r_theta: f64,
    pub r_omega: f64,
}

impl ProjectionConfig {
    pub const NONE: ProjectionConfig = ProjectionConfig {
        mode: ProjectionMode::None,
        r_theta: f64::INFINITY,
        r_omega: f64::INFINITY,
    };

    pub fn separate(r_theta: f64, r_omega: f64) -> Self {
        ProjectionConfig {
            mode: ProjectionMode::Separate,
            r_theta,
            r_omega,
        }
    }

    pub fn joint(r_theta: f64) -> Self {
        ProjectionConfig {
            mode: ProjectionMode::Joint,
            r_theta,
            r_omega: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            ProjectionMode::None => Ok(()),
            ProjectionMode::Joint if self.r_theta > 0.0 => Ok(()),
            ProjectionMode::Separate if self.r_theta > 0.0 && self.r_omega > 0.0 => Ok(()),
            _ => Err(Error::Config(vec![format!(
                "projection radii must be positive (r_theta = {}, r_omega = {})",
                self.r_theta, self.r_omega
            )])),
        }
    }
}

/// `(omega_hat - omega)^2 + |Pi_O (theta_hat - theta*)|^2`.
pub fn evaluation_loss(state: &LearnerState, oracle: &OracleSolution) -> Result<f64> {
    if state.dim() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            found: state.dim(),
        });
    }
    let err = &state.theta_hat - &oracle.theta_star;
    let projected = &oracle.projector * err;
    Ok((state.omega_hat - oracle.omega).powi(2) + projected.norm_squared())
}
