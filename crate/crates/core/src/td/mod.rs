//! Average-reward TD(lambda) learners: standard, implicit, and implicit
//! with projection.

mod canonical;
mod learner;
mod run;
mod schedule;

pub use canonical::{a_max, b_max, canonical_form, stack, CanonicalStep};
pub use learner::{
    evaluation_loss, LearnerState, ProjectionConfig, ProjectionMode, Transition, Variant,
};
pub use run::{
    initial_state, run_evaluation, run_evaluation_from, Algorithm, EvalProblem, EvalSpec,
    RunRecord, DEFAULT_R_OMEGA, DEFAULT_R_THETA,
};
pub use schedule::{ScheduleKind, StepSchedule};
