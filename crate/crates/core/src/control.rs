//! Average-reward SARSA(lambda) over joint state-action features, using
//! the same standard / implicit updates as policy evaluation.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::{AccessControl, ControlEnv, Pendulum};
use crate::error::{Error, Result};
use crate::features::{build_fourier_map_with, joint_state_action_features, StateFeaturizer};
use crate::td::{
    initial_state, LearnerState, ProjectionConfig, RunRecord, StepSchedule, Transition, Variant,
};

/// Exploration rate: 0.25, then 0.125 from step 5000, then 0 from 10000.
pub fn epsilon_at(t: usize) -> f64 {
    match t {
        0..5000 => 0.25,
        5000..10000 => 0.125,
        _ => 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exploration {
    Staged,
    Constant(f64),
}

impl Exploration {
    pub fn at(self, t: usize) -> f64 {
        match self {
            Exploration::Staged => epsilon_at(t),
            Exploration::Constant(e) => e,
        }
    }
}

/// Epsilon-greedy choice over feasible actions. Greedy ties go to the
/// lowest index.
pub fn select_action<R: Rng + ?Sized>(
    q_values: &[f64],
    feasible: &[bool],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let allowed: Vec<usize> = (0..q_values.len()).filter(|&a| feasible[a]).collect();
    if allowed.is_empty() {
        return Err(Error::NoFeasibleAction);
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(allowed[rng.random_range(0..allowed.len())]);
    }
    let mut best = allowed[0];
    for &a in &allowed[1..] {
        if q_values[a] > q_values[best] {
            best = a;
        }
    }
    Ok(best)
}

/// Learner iterates plus the exploration rate in force at `step`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlLearnerState {
    pub learner: LearnerState,
    pub epsilon: f64,
}

/// One SARSA(lambda) update toward the chosen next pair; identical to the
/// evaluation step with `phi(s, a)` in place of `phi(s)`.
pub fn sarsa_step(
    state: &mut ControlLearnerState,
    tr: &Transition<'_>,
    beta: f64,
    c_alpha: f64,
    lambda: f64,
    variant: Variant,
    exploration: Exploration,
) -> Result<f64> {
    let delta = state.learner.step(variant, tr, beta, c_alpha, lambda)?;
    state.epsilon = exploration.at(state.learner.step);
    Ok(delta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlSpec {
    pub variant: Variant,
    pub projection: ProjectionConfig,
    pub schedule: StepSchedule,
    pub lambda: f64,
    pub horizon: usize,
    pub exploration: Exploration,
    /// Initial weights are drawn uniformly from `[-r, r]`.
    pub init_range: f64,
}

impl ControlSpec {
    pub fn new(variant: Variant, schedule: StepSchedule, lambda: f64, horizon: usize) -> Self {
        ControlSpec {
            variant,
            projection: ProjectionConfig::NONE,
            schedule,
            lambda,
            horizon,
            exploration: Exploration::Staged,
            init_range: 0.5,
        }
    }
}

/// Length of the post-exploration window used as the sweep metric.
pub const TAIL_WINDOW: usize = 5000;

/// Mean of the last `window` entries (all of them when shorter).
pub fn tail_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(window)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn q_values(theta: &DVector<f64>, state_features: &DVector<f64>, n_actions: usize) -> Vec<f64> {
    let d = state_features.len();
    (0..n_actions)
        .map(|a| theta.rows(a * d, d).dot(state_features))
        .collect()
}

/// Runs SARSA(lambda) for `horizon` steps and records the per-step reward
/// and the average-reward estimate after each update.
///
/// If the iterates become non-finite the run is marked diverged and the
/// remaining steps are played by the uniform feasible policy, since no
/// greedy action exists.
pub fn run_control<E: ControlEnv>(
    env: &E,
    featurizer: &StateFeaturizer,
    spec: &ControlSpec,
    seed: u64,
    rng: &mut impl Rng,
) -> Result<RunRecord> {
    spec.schedule.validate()?;
    spec.projection.validate()?;
    let n_actions = env.n_actions();
    let d = featurizer.dim() * n_actions;
    let mut record = RunRecord {
        seed,
        values: Vec::with_capacity(spec.horizon),
        omega_estimates: Vec::with_capacity(spec.horizon),
        diverged: false,
        truncated_at: None,
        max_trace_norm: 0.0,
        max_theta_norm: 0.0,
        max_abs_omega: 0.0,
    };
    if spec.horizon == 0 {
        return Ok(record);
    }
    let mut learner = ControlLearnerState {
        learner: initial_state(d, spec.init_range, rng),
        epsilon: spec.exploration.at(0),
    };
    let mut s = env.initial_state(rng);
    let mut sf = featurizer.evaluate(&env.observe(&s));
    let mut a = select_action(
        &q_values(&learner.learner.theta_hat, &sf, n_actions),
        &env.feasible(&s),
        learner.epsilon,
        rng,
    )?;

    for t in 0..spec.horizon {
        let (s_next, reward) = env.step(&s, a, rng)?;
        let sf_next = featurizer.evaluate(&env.observe(&s_next));
        record.values.push(reward);
        if record.diverged {
            record.omega_estimates.push(f64::NAN);
            a = select_action(&vec![0.0; n_actions], &env.feasible(&s_next), 1.0, rng)?;
        } else {
            let eps_next = spec.exploration.at(t + 1);
            let a_next = select_action(
                &q_values(&learner.learner.theta_hat, &sf_next, n_actions),
                &env.feasible(&s_next),
                eps_next,
                rng,
            )?;
            let phi = joint_state_action_features(&sf, a, n_actions)?;
            let phi_next = joint_state_action_features(&sf_next, a_next, n_actions)?;
            let tr = Transition {
                phi: &phi,
                reward,
                phi_next: &phi_next,
            };
            let beta = spec.schedule.beta_at(t);
            match sarsa_step(
                &mut learner,
                &tr,
                beta,
                spec.schedule.c_alpha,
                spec.lambda,
                spec.variant,
                spec.exploration,
            ) {
                Ok(_) => {
                    learner.learner.project(&spec.projection);
                    record.observe_state(&learner.learner);
                    record.omega_estimates.push(learner.learner.omega_hat);
                }
                Err(Error::NonFiniteUpdate { .. }) => {
                    record.diverged = true;
                    record.truncated_at = Some(t);
                    record.omega_estimates.push(f64::NAN);
                }
                Err(e) => return Err(e),
            }
            a = a_next;
        }
        s = s_next;
        sf = sf_next;
    }
    Ok(record)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlTask {
    Access(AccessControl),
    Pendulum,
}

impl ControlTask {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "access" => Ok(ControlTask::Access(AccessControl::default())),
            "pendulum" => Ok(ControlTask::Pendulum),
            other => Err(Error::Config(vec![format!("unknown control env `{other}`")])),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControlTask::Access(_) => "access",
            ControlTask::Pendulum => "pendulum",
        }
    }

    /// Access control: one 20-feature map with `gamma = 1` on the scaled
    /// state. Pendulum: 150 features each at `gamma = 0.5` and `gamma = 1`
    /// on the raw `(cos, sin, velocity)` observation. Squeezing the velocity
    /// range onto `[0, 1]` leaves those length-scales too wide to separate
    /// swing-up states.
    pub fn featurizer<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<StateFeaturizer> {
        let maps = match self {
            ControlTask::Access(_) => vec![build_fourier_map_with(2, 20, 1.0, rng)?],
            ControlTask::Pendulum => vec![
                build_fourier_map_with(3, 150, 0.5, rng)?,
                build_fourier_map_with(3, 150, 1.0, rng)?,
            ],
        };
        Ok(StateFeaturizer::new(maps))
    }

    /// One seeded run: the feature map is drawn from the run's own stream.
    pub fn run(&self, spec: &ControlSpec, seed: u64) -> Result<RunRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let featurizer = self.featurizer(&mut rng)?;
        match self {
            ControlTask::Access(env) => {
                env.validate()?;
                run_control(env, &featurizer, spec, seed, &mut rng)
            }
            ControlTask::Pendulum => run_control(&Pendulum, &featurizer, spec, seed, &mut rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_boundaries() {
        assert_eq!(epsilon_at(0), 0.25);
        assert_eq!(epsilon_at(4999), 0.25);
        assert_eq!(epsilon_at(5000), 0.125);
        assert_eq!(epsilon_at(9999), 0.125);
        assert_eq!(epsilon_at(10000), 0.0);
        assert_eq!(epsilon_at(usize::MAX), 0.0);
    }

    #[test]
    fn greedy_and_masking() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&[1.0, 3.0, 2.0], &[true; 3], 0.0, &mut rng).unwrap(), 1);
        assert_eq!(
            select_action(&[1.0, 3.0, 2.0], &[true, false, true], 0.0, &mut rng).unwrap(),
            2
        );
        assert_eq!(select_action(&[2.0, 2.0], &[true, true], 0.0, &mut rng).unwrap(), 0);
        assert!(matches!(
            select_action(&[1.0], &[false], 0.5, &mut rng),
            Err(Error::NoFeasibleAction)
        ));
    }

    #[test]
    fn exploration_respects_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = select_action(&[0.0, 9.0, 0.0], &[true, false, true], 1.0, &mut rng).unwrap();
            assert_ne!(a, 1);
        }
    }

    #[test]
    fn tail_mean_window() {
        assert_eq!(tail_mean(&[1.0, 2.0, 3.0, 4.0], 2), 3.5);
        assert_eq!(tail_mean(&[1.0, 3.0], 10), 2.0);
    }

    #[test]
    fn zero_horizon_is_empty() {
        let spec = ControlSpec::new(
            Variant::Implicit,
            StepSchedule::offset_poly(400.0, 0.99, 400, 150, 1.0),
            0.25,
            0,
        );
        let rec = ControlTask::Pendulum.run(&spec, 3).unwrap();
        assert!(rec.values.is_empty());
    }

    #[test]
    fn control_runs_are_deterministic() {
        let spec = ControlSpec::new(
            Variant::Implicit,
            StepSchedule::offset_poly(400.0, 0.99, 400, 150, 1.0),
            0.25,
            500,
        );
        let task = ControlTask::parse("access").unwrap();
        assert_eq!(task.run(&spec, 11).unwrap(), task.run(&spec, 11).unwrap());
        assert!(ControlTask::parse("cartpole").is_err());
    }
}
