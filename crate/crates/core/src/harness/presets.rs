//! Named sweep configurations for each figure.

use crate::envs::AccessControl;
use crate::error::{Error, Result};
use crate::markov::Tolerances;
use crate::td::{Algorithm, ScheduleKind};

use super::config::{EnvSpec, ExperimentConfig, Reduction, SweepAxis};

pub const PRESET_NAMES: &[&str] = &[
    "fig1-mrp-sensitivity",
    "fig2-mrp-constant",
    "fig3-boyan-decay",
    "fig4-control-access",
    "fig4-control-pendulum",
    "figA-mrp-decay",
    "figA-boyan-constant",
    "figA-calpha-mrp",
    "figA-calpha-boyan",
];

/// `start, start + step, ..., stop`, rounded to suppress accumulation error.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

fn evaluation_algorithms() -> Vec<Algorithm> {
    vec![
        Algorithm::STANDARD,
        Algorithm::IMPLICIT,
        Algorithm::implicit_projected(1000.0),
        Algorithm::implicit_projected(5000.0),
    ]
}

fn calpha_grid() -> Vec<f64> {
    let mut g = vec![0.01, 0.05, 0.1];
    g.extend(linear_grid(0.125, 1.5, 0.125));
    g
}

fn evaluation_base(id: &str, env: EnvSpec) -> ExperimentConfig {
    ExperimentConfig {
        id: id.to_string(),
        env,
        algorithms: evaluation_algorithms(),
        lambda: 0.25,
        c_alpha: 1.0,
        schedule_kind: ScheduleKind::Constant,
        exponent: 1.0,
        hold: 0,
        offset: 1,
        beta0: 1.0,
        beta0_scale: 1.0,
        axis: SweepAxis::Beta0,
        grid: linear_grid(0.1, 3.0, 0.1),
        horizon: 2000,
        n_runs: 50,
        seed: 0,
        record_every: 10,
        reduction: Reduction::Final,
        divergence_threshold: 1e10,
        share_env: true,
        trajectory_at: None,
        log_y: true,
        tolerances: Tolerances::default(),
    }
}

fn decaying(mut c: ExperimentConfig) -> ExperimentConfig {
    c.schedule_kind = ScheduleKind::Poly;
    c.exponent = 0.99;
    c.hold = 150;
    c
}

fn control(id: &str, env: EnvSpec) -> ExperimentConfig {
    ExperimentConfig {
        algorithms: vec![
            Algorithm::STANDARD,
            Algorithm::IMPLICIT,
            Algorithm::implicit_projected(1000.0),
            Algorithm::implicit_projected(5000.0),
        ],
        schedule_kind: ScheduleKind::OffsetPoly,
        exponent: 0.99,
        hold: 150,
        offset: 400,
        beta0_scale: 400.0,
        grid: linear_grid(0.25, 1.5, 0.25),
        horizon: 15000,
        n_runs: 30,
        record_every: 50,
        reduction: Reduction::TailMean(crate::control::TAIL_WINDOW),
        share_env: false,
        trajectory_at: Some(1.0),
        log_y: false,
        ..evaluation_base(id, env)
    }
}

const MRP: EnvSpec = EnvSpec::Mrp {
    n_states: 100,
    d: 20,
};

/// Full-scale preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let c = match name {
        "fig1-mrp-sensitivity" => ExperimentConfig {
            algorithms: vec![Algorithm::STANDARD],
            trajectory_at: Some(1.8),
            ..evaluation_base(name, MRP)
        },
        "fig2-mrp-constant" => ExperimentConfig {
            trajectory_at: Some(1.0),
            ..evaluation_base(name, MRP)
        },
        "fig3-boyan-decay" => ExperimentConfig {
            share_env: false,
            trajectory_at: Some(1.5),
            ..decaying(evaluation_base(name, EnvSpec::Boyan))
        },
        "figA-mrp-decay" => ExperimentConfig {
            trajectory_at: Some(1.0),
            ..decaying(evaluation_base(name, MRP))
        },
        "figA-boyan-constant" => ExperimentConfig {
            share_env: false,
            trajectory_at: Some(1.0),
            ..evaluation_base(name, EnvSpec::Boyan)
        },
        "figA-calpha-mrp" => ExperimentConfig {
            axis: SweepAxis::CAlpha,
            grid: calpha_grid(),
            ..evaluation_base(name, MRP)
        },
        "figA-calpha-boyan" => ExperimentConfig {
            axis: SweepAxis::CAlpha,
            grid: calpha_grid(),
            share_env: false,
            ..decaying(evaluation_base(name, EnvSpec::Boyan))
        },
        "fig4-control-access" | "fig4-control" => {
            control("fig4-control-access", EnvSpec::Access(AccessControl::default()))
        }
        "fig4-control-pendulum" => control(name, EnvSpec::Pendulum),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(c)
}

/// Halves the run count (at least one) and keeps every other grid point
/// plus both endpoints.
pub fn desk_scale(mut c: ExperimentConfig) -> ExperimentConfig {
    c.n_runs = (c.n_runs / 2).max(1);
    let last = c.grid.len().saturating_sub(1);
    c.grid = c
        .grid
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 2 == 0 || *i == last)
        .map(|(_, g)| *g)
        .collect();
    c
}

pub fn figure_presets() -> Vec<ExperimentConfig> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n).expect("built-in preset"))
        .collect()
}
