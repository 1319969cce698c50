use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::learner::{evaluation_loss, LearnerState, ProjectionConfig, ProjectionMode, Transition, Variant};
use super::schedule::StepSchedule;
use crate::envs::ChainSampler;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::markov::{ChainModel, OracleSolution};

/// Learner variant plus the projection applied after each update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Algorithm {
    pub variant: Variant,
    pub projection: ProjectionConfig,
}

/// Default radius for `implicit-proj` without an explicit radius.
pub const DEFAULT_R_THETA: f64 = 5000.0;
/// Radius for the average-reward estimate in separate projection mode.
pub const DEFAULT_R_OMEGA: f64 = 1.0;

impl Algorithm {
    pub const STANDARD: Algorithm = Algorithm {
        variant: Variant::Standard,
        projection: ProjectionConfig::NONE,
    };
    pub const IMPLICIT: Algorithm = Algorithm {
        variant: Variant::Implicit,
        projection: ProjectionConfig::NONE,
    };

    pub fn implicit_projected(r_theta: f64) -> Self {
        Algorithm {
            variant: Variant::Implicit,
            projection: ProjectionConfig::separate(r_theta, DEFAULT_R_OMEGA),
        }
    }

    /// `standard`, `implicit`, `implicit-proj[-R]` (separate caps with
    /// `R_omega = 1`) or `implicit-joint[-R]` (joint ball of radius `R`).
    pub fn parse(label: &str) -> Result<Self> {
        let bad = || Error::Config(vec![format!("unknown algorithm `{label}`")]);
        let (variant, rest) = if let Some(rest) = label.strip_prefix("standard") {
            (Variant::Standard, rest)
        } else if let Some(rest) = label.strip_prefix("implicit") {
            (Variant::Implicit, rest)
        } else {
            return Err(bad());
        };
        let radius = |s: &str| -> Result<f64> {
            match s {
                "" => Ok(DEFAULT_R_THETA),
                _ => s
                    .strip_prefix('-')
                    .and_then(|r| r.parse::<f64>().ok())
                    .filter(|r| *r > 0.0)
                    .ok_or_else(bad),
            }
        };
        let projection = if rest.is_empty() {
            ProjectionConfig::NONE
        } else if let Some(r) = rest.strip_prefix("-proj") {
            ProjectionConfig::separate(radius(r)?, DEFAULT_R_OMEGA)
        } else if let Some(r) = rest.strip_prefix("-joint") {
            ProjectionConfig::joint(radius(r)?)
        } else {
            return Err(bad());
        };
        Ok(Algorithm {
            variant,
            projection,
        })
    }

    pub fn label(&self) -> String {
        let base = self.variant.name();
        match self.projection.mode {
            ProjectionMode::None => base.to_string(),
            ProjectionMode::Separate => format!("{base}-proj-{}", self.projection.r_theta),
            ProjectionMode::Joint => format!("{base}-joint-{}", self.projection.r_theta),
        }
    }
}

/// A chain under a fixed policy, its feature matrix, and the oracle for
/// the loss.
#[derive(Clone, Debug)]
pub struct EvalProblem {
    pub chain: ChainModel,
    pub sampler: ChainSampler,
    pub features: FeatureMatrix,
    pub oracle: OracleSolution,
}

impl EvalProblem {
    pub fn new(chain: ChainModel, features: FeatureMatrix, oracle: OracleSolution) -> Self {
        let sampler = ChainSampler::new(&chain);
        EvalProblem {
            chain,
            sampler,
            features,
            oracle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSpec {
    pub algorithm: Algorithm,
    pub schedule: StepSchedule,
    pub lambda: f64,
    pub horizon: usize,
    /// Loss above this value counts as divergence and ends the run.
    pub divergence_threshold: f64,
    /// Initial weights are drawn uniformly from `[-r, r]^d`.
    pub init_range: f64,
}

impl EvalSpec {
    pub fn new(algorithm: Algorithm, schedule: StepSchedule, lambda: f64, horizon: usize) -> Self {
        EvalSpec {
            algorithm,
            schedule,
            lambda,
            horizon,
            divergence_threshold: 1e10,
            init_range: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.algorithm.projection.validate()?;
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::Config(vec![format!("lambda = {} outside [0, 1)", self.lambda)]));
        }
        Ok(())
    }
}

/// Trajectory of one run.
///
/// `values[t]` is the loss (evaluation) or reward (control) at iteration
/// `t`. After a divergence the last finite value is carried forward to the
/// horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub values: Vec<f64>,
    pub omega_estimates: Vec<f64>,
    pub diverged: bool,
    pub truncated_at: Option<usize>,
    pub max_trace_norm: f64,
    pub max_theta_norm: f64,
    pub max_abs_omega: f64,
}

impl RunRecord {
    fn new(seed: u64, capacity: usize) -> Self {
        RunRecord {
            seed,
            values: Vec::with_capacity(capacity),
            omega_estimates: Vec::with_capacity(capacity),
            diverged: false,
            truncated_at: None,
            max_trace_norm: 0.0,
            max_theta_norm: 0.0,
            max_abs_omega: 0.0,
        }
    }

    pub(crate) fn observe_state(&mut self, state: &LearnerState) {
        self.max_trace_norm = self.max_trace_norm.max(state.trace.norm());
        self.max_theta_norm = self.max_theta_norm.max(state.theta_hat.norm());
        self.max_abs_omega = self.max_abs_omega.max(state.omega_hat.abs());
    }

    pub(crate) fn push(&mut self, value: f64, omega: f64) {
        self.values.push(value);
        self.omega_estimates.push(omega);
    }

    pub(crate) fn truncate_at(&mut self, t: usize, len: usize) {
        self.diverged = true;
        self.truncated_at = Some(t);
        let last = self.values.last().copied().unwrap_or(f64::NAN);
        let omega = self.omega_estimates.last().copied().unwrap_or(f64::NAN);
        self.values.resize(len, last);
        self.omega_estimates.resize(len, omega);
    }

    pub fn final_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn initial_state<R: Rng + ?Sized>(d: usize, range: f64, rng: &mut R) -> LearnerState {
    let theta = DVector::from_fn(d, |_, _| rng.random_range(-range..=range));
    LearnerState::new(0.0, theta)
}

/// Runs one policy-evaluation trajectory of `horizon` updates and records
/// the loss before the first update and after each update (including any
/// projection).
pub fn run_evaluation(problem: &EvalProblem, spec: &EvalSpec, seed: u64) -> Result<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = initial_state(problem.features.dim(), spec.init_range, &mut rng);
    run_evaluation_from(problem, spec, state, &mut rng, seed)
}

/// As [`run_evaluation`] but from a given initial iterate and RNG.
pub fn run_evaluation_from<R: Rng + ?Sized>(
    problem: &EvalProblem,
    spec: &EvalSpec,
    mut state: LearnerState,
    rng: &mut R,
    seed: u64,
) -> Result<RunRecord> {
    spec.validate()?;
    let len = spec.horizon + 1;
    let mut record = RunRecord::new(seed, len);
    let loss0 = evaluation_loss(&state, &problem.oracle)?;
    record.push(loss0, state.omega_hat);
    record.observe_state(&state);

    let phi = problem.features.matrix();
    let rows: Vec<DVector<f64>> = (0..phi.nrows()).map(|i| phi.row(i).transpose()).collect();
    let mut current = problem.sampler.initial_state(rng);
    let Algorithm {
        variant,
        projection,
    } = spec.algorithm;

    for t in 0..spec.horizon {
        let (next, reward) = problem.sampler.step(current, rng);
        let tr = Transition {
            phi: &rows[current],
            reward,
            phi_next: &rows[next],
        };
        let beta = spec.schedule.beta_at(t);
        match state.step(variant, &tr, beta, spec.schedule.c_alpha, spec.lambda) {
            Ok(_) => {}
            Err(Error::NonFiniteUpdate { .. }) => {
                record.truncate_at(t + 1, len);
                return Ok(record);
            }
            Err(e) => return Err(e),
        }
        state.project(&projection);
        record.observe_state(&state);
        let loss = evaluation_loss(&state, &problem.oracle)?;
        if !loss.is_finite() {
            record.truncate_at(t + 1, len);
            return Ok(record);
        }
        record.push(loss, state.omega_hat);
        if loss > spec.divergence_threshold {
            record.truncate_at(t + 1, len);
            return Ok(record);
        }
        current = next;
    }
    Ok(record)
}
