use rayon::prelude::*;

use crate::control::{ControlSpec, ControlTask, Exploration};
use crate::envs::{generate_mrp, sample_boyan_policy};
use crate::error::{Error, Result};
use crate::features::{build_boyan_features, build_random_features};
use crate::markov::{ChainSolution, OracleSolution, Tolerances};
use crate::td::{run_evaluation, EvalProblem, EvalSpec, RunRecord};

use super::config::{EnvSpec, ExperimentConfig};
use super::seed::{env_seed, run_seed};

/// Random MRP with random binary features augmented by `e` and `v`.
pub fn build_mrp_problem(
    n_states: usize,
    d: usize,
    lambda: f64,
    chain_seed: u64,
    feature_seed: u64,
    tol: &Tolerances,
) -> Result<EvalProblem> {
    let chain = generate_mrp(n_states, chain_seed)?;
    let solution = ChainSolution::solve_with(&chain, tol)?;
    let features = build_random_features(n_states, d, &solution.v, feature_seed)?;
    let oracle = OracleSolution::compute_with(&chain, &solution, &features, lambda, tol)?;
    Ok(EvalProblem::new(chain, features, oracle))
}

/// Boyan chain under a coin-flip policy with interpolation features.
pub fn build_boyan_problem(lambda: f64, policy_seed: u64, tol: &Tolerances) -> Result<EvalProblem> {
    let (chain, _) = sample_boyan_policy(policy_seed);
    let solution = ChainSolution::solve_with(&chain, tol)?;
    let features = build_boyan_features(&solution.v)?;
    let oracle = OracleSolution::compute_with(&chain, &solution, &features, lambda, tol)?;
    Ok(EvalProblem::new(chain, features, oracle))
}

/// Evaluation problem used by `run` of a sweep. A shared environment uses
/// index 0 for every run.
pub fn problem_for(config: &ExperimentConfig, run: usize) -> Result<EvalProblem> {
    let index = if config.share_env { 0 } else { run };
    let seed = |role| env_seed(config.seed, &config.id, role, index);
    match config.env {
        EnvSpec::Mrp { n_states, d } => build_mrp_problem(
            n_states,
            d,
            config.lambda,
            seed("chain"),
            seed("features"),
            &config.tolerances,
        ),
        EnvSpec::Boyan => build_boyan_problem(config.lambda, seed("policy"), &config.tolerances),
        EnvSpec::Access(_) | EnvSpec::Pendulum => Err(Error::Config(vec![format!(
            "env.kind: `{}` is a control environment",
            config.env.kind()
        )])),
    }
}

/// Worker count from `TDLAB_WORKERS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("TDLAB_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub algorithm: String,
    pub grid_value: f64,
    /// Per-run metric after the configured reduction.
    pub metrics: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub ci_half_width: f64,
    pub divergences: usize,
    /// Recorded points per run, aligned with `SweepResult::recorded_t`.
    pub records: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub recorded_t: Vec<usize>,
    /// Ordered by algorithm, then grid value.
    pub cells: Vec<CellResult>,
}

/// Mean, sample standard deviation and 95% normal half-width. With one
/// sample the spread is defined as zero.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd, 1.96 * sd / (n as f64).sqrt())
}

/// Indices `0, k, 2k, ...` plus the last index.
pub fn recorded_indices(len: usize, every: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..len).step_by(every).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

/// Keeps the recorded points of a run. Control rewards are replaced by the
/// mean over the block ending at each point, since single rewards are too
/// noisy to plot.
fn thin(record: &mut RunRecord, idx: &[usize], block: usize, block_means: bool) {
    let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    record.omega_estimates = pick(&record.omega_estimates);
    record.values = if block_means {
        idx.iter()
            .map(|&i| {
                let lo = (i + 1).saturating_sub(block);
                record.values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
            })
            .collect()
    } else {
        pick(&record.values)
    };
}

struct Job {
    algo: usize,
    grid: usize,
    run: usize,
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with_workers(config, worker_count())
}

/// Runs every `(algorithm, grid value, run)` cell in parallel and folds
/// the results sequentially in index order, so the output does not depend
/// on `workers`.
pub fn run_sweep_with_workers(config: &ExperimentConfig, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    let control = config.env.is_control();
    let problems: Vec<EvalProblem> = if control {
        Vec::new()
    } else if config.share_env {
        vec![problem_for(config, 0)?]
    } else {
        (0..config.n_runs)
            .map(|r| problem_for(config, r))
            .collect::<Result<_>>()?
    };

    let labels: Vec<String> = config.algorithms.iter().map(|a| a.label()).collect();
    let mut jobs = Vec::new();
    for algo in 0..config.algorithms.len() {
        for grid in 0..config.grid.len() {
            for run in 0..config.n_runs {
                jobs.push(Job { algo, grid, run });
            }
        }
    }
    let series_len = if control { config.horizon } else { config.horizon + 1 };
    let recorded_t = recorded_indices(series_len, config.record_every);

    let execute = |job: &Job| -> Result<(f64, RunRecord)> {
        let algorithm = config.algorithms[job.algo];
        let g = config.grid[job.grid];
        let seed = run_seed(config.seed, &config.id, &labels[job.algo], g, job.run);
        let schedule = config.schedule_for(g);
        let mut record = if control {
            let task = match config.env {
                EnvSpec::Access(a) => ControlTask::Access(a),
                _ => ControlTask::Pendulum,
            };
            let spec = ControlSpec {
                variant: algorithm.variant,
                projection: algorithm.projection,
                exploration: Exploration::Staged,
                ..ControlSpec::new(algorithm.variant, schedule, config.lambda, config.horizon)
            };
            task.run(&spec, seed)?
        } else {
            let spec = EvalSpec {
                divergence_threshold: config.divergence_threshold,
                ..EvalSpec::new(algorithm, schedule, config.lambda, config.horizon)
            };
            let problem = &problems[if config.share_env { 0 } else { job.run }];
            run_evaluation(problem, &spec, seed)?
        };
        let metric = config.reduction.apply(&record.values);
        thin(&mut record, &recorded_t, config.record_every, control);
        Ok((metric, record))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(vec![format!("worker pool: {e}")]))?;
    let outcomes: Vec<Result<(f64, RunRecord)>> = pool.install(|| jobs.par_iter().map(execute).collect());

    let mut cells = Vec::with_capacity(config.algorithms.len() * config.grid.len());
    let mut outcomes = outcomes.into_iter();
    for label in &labels {
        for &g in &config.grid {
            let mut metrics = Vec::with_capacity(config.n_runs);
            let mut records = Vec::with_capacity(config.n_runs);
            for _ in 0..config.n_runs {
                let (m, r) = outcomes.next().expect("one outcome per job")?;
                metrics.push(m);
                records.push(r);
            }
            let (mean, sd, ci_half_width) = summarize(&metrics);
            cells.push(CellResult {
                algorithm: label.clone(),
                grid_value: g,
                divergences: records.iter().filter(|r| r.diverged).count(),
                metrics,
                mean,
                sd,
                ci_half_width,
                records,
            });
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        recorded_t,
        cells,
    })
}
