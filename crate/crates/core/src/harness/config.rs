//! Experiment configuration and its flat `key = value` text format.
//!
//! ```text
//! # comment
//! id = fig2-mrp-constant
//! [env]
//! kind = mrp
//! n_states = 100
//! ```
//!
//! Keys inside a `[section]` are addressed as `section.key`.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::envs::AccessControl;
use crate::error::{Error, Result};
use crate::markov::Tolerances;
use crate::td::{Algorithm, ScheduleKind, StepSchedule};

use super::seed::Fnv1a;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnvSpec {
    Mrp { n_states: usize, d: usize },
    Boyan,
    Access(AccessControl),
    Pendulum,
}

impl EnvSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvSpec::Mrp { .. } => "mrp",
            EnvSpec::Boyan => "boyan",
            EnvSpec::Access(_) => "access",
            EnvSpec::Pendulum => "pendulum",
        }
    }

    pub fn is_control(&self) -> bool {
        matches!(self, EnvSpec::Access(_) | EnvSpec::Pendulum)
    }
}

/// Which parameter the sweep grid varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Beta0,
    CAlpha,
}

/// How a run's trajectory is reduced to the per-run sweep metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Final,
    TailMean(usize),
    Mean,
}

impl Reduction {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "final" => Some(Reduction::Final),
            "mean" => Some(Reduction::Mean),
            _ => s
                .strip_prefix("tail:")
                .and_then(|k| k.parse().ok())
                .filter(|k| *k > 0)
                .map(Reduction::TailMean),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Reduction::Final => "final".into(),
            Reduction::Mean => "mean".into(),
            Reduction::TailMean(k) => format!("tail:{k}"),
        }
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        match *self {
            Reduction::Final => values.last().copied().unwrap_or(f64::NAN),
            Reduction::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Reduction::TailMean(k) => crate::control::tail_mean(values, k),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub env: EnvSpec,
    pub algorithms: Vec<Algorithm>,
    pub lambda: f64,
    pub c_alpha: f64,
    pub schedule_kind: ScheduleKind,
    pub exponent: f64,
    pub hold: usize,
    pub offset: usize,
    /// Fixed initial step size when the grid varies `c_alpha`.
    pub beta0: f64,
    /// Grid values of the step size are multiplied by this factor.
    pub beta0_scale: f64,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub horizon: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub record_every: usize,
    pub reduction: Reduction,
    pub divergence_threshold: f64,
    /// One chain for the whole sweep (true) or a fresh one per run.
    pub share_env: bool,
    pub trajectory_at: Option<f64>,
    pub log_y: bool,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Schedule for a grid value.
    pub fn schedule_for(&self, grid_value: f64) -> StepSchedule {
        let (beta0, c_alpha) = match self.axis {
            SweepAxis::Beta0 => (grid_value * self.beta0_scale, self.c_alpha),
            SweepAxis::CAlpha => (self.beta0 * self.beta0_scale, grid_value),
        };
        StepSchedule {
            kind: self.schedule_kind,
            beta0,
            s: self.exponent,
            hold: self.hold,
            offset: self.offset,
            c_alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.id.trim().is_empty() {
            problems.push("id: must not be empty".to_string());
        }
        if self.algorithms.is_empty() {
            problems.push("learner.algorithms: at least one algorithm required".to_string());
        }
        if !(0.0..1.0).contains(&self.lambda) {
            problems.push(format!("learner.lambda: {} outside [0, 1)", self.lambda));
        }
        if self.grid.is_empty() {
            problems.push("sweep.grid: must not be empty".to_string());
        }
        if self.n_runs == 0 {
            problems.push("sweep.runs: must be at least 1".to_string());
        }
        if self.record_every == 0 {
            problems.push("sweep.record_every: must be at least 1".to_string());
        }
        if !(self.beta0_scale > 0.0) {
            problems.push("schedule.beta0_scale: must be positive".to_string());
        }
        if let EnvSpec::Mrp { n_states, d } = self.env {
            if n_states < 2 {
                problems.push("env.n_states: must be at least 2".to_string());
            }
            if d < 3 || d > n_states {
                problems.push(format!("env.d: {d} outside [3, n_states]"));
            }
        }
        if let EnvSpec::Access(a) = self.env {
            if let Err(Error::Config(p)) = a.validate() {
                problems.extend(p.into_iter().map(|m| format!("env: {m}")));
            }
        }
        for &g in &self.grid {
            if let Err(Error::Config(p)) = self.schedule_for(g).validate() {
                problems.extend(p.into_iter().map(|m| format!("sweep.grid ({g}): {m}")));
            }
        }
        for a in &self.algorithms {
            if let Err(Error::Config(p)) = a.projection.validate() {
                problems.extend(p);
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Serializes to the text format; `parse(to_text())` is the identity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        writeln!(s, "id = {}", self.id).unwrap();
        writeln!(s, "\n[env]\nkind = {}", self.env.kind()).unwrap();
        match self.env {
            EnvSpec::Mrp { n_states, d } => {
                writeln!(s, "n_states = {n_states}\nd = {d}").unwrap();
            }
            EnvSpec::Access(a) => {
                writeln!(s, "servers = {}\nclasses = {}\np = {}", a.servers, a.classes, a.p).unwrap();
            }
            EnvSpec::Boyan | EnvSpec::Pendulum => {}
        }
        let algos: Vec<String> = self.algorithms.iter().map(Algorithm::label).collect();
        writeln!(
            s,
            "\n[learner]\nalgorithms = {}\nlambda = {}\nc_alpha = {}",
            algos.join(", "),
            self.lambda,
            self.c_alpha
        )
        .unwrap();
        writeln!(
            s,
            "\n[schedule]\nkind = {}\ns = {}\nhold = {}\noffset = {}\nbeta0 = {}\nbeta0_scale = {}",
            self.schedule_kind.name(),
            self.exponent,
            self.hold,
            self.offset,
            self.beta0,
            self.beta0_scale
        )
        .unwrap();
        writeln!(
            s,
            "\n[sweep]\naxis = {}\ngrid = {}\nhorizon = {}\nruns = {}\nseed = {}\nrecord_every = {}\nreduction = {}\ndivergence_threshold = {:e}\nshare_env = {}",
            match self.axis {
                SweepAxis::Beta0 => "beta0",
                SweepAxis::CAlpha => "c_alpha",
            },
            join(&self.grid),
            self.horizon,
            self.n_runs,
            self.seed,
            self.record_every,
            self.reduction.name(),
            self.divergence_threshold,
            self.share_env
        )
        .unwrap();
        writeln!(s, "\n[plot]\nlog_y = {}", self.log_y).unwrap();
        if let Some(t) = self.trajectory_at {
            writeln!(s, "trajectory_at = {t}").unwrap();
        }
        writeln!(
            s,
            "\n[tolerances]\nentry = {:e}\nresidual = {:e}",
            self.tolerances.entry, self.tolerances.residual
        )
        .unwrap();
        s
    }

    /// Stable hash of the serialized configuration.
    pub fn config_hash(&self) -> String {
        format!("{:016x}", Fnv1a::default().str(&self.to_text()).finish())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_sections(text)?;
        let mut reader = Reader {
            map: &map,
            problems: Vec::new(),
        };
        let cfg = reader.build();
        let mut problems = reader.problems;
        let known = KNOWN_KEYS;
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                problems.push(format!("{key}: unknown key"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "id",
    "env.kind",
    "env.n_states",
    "env.d",
    "env.servers",
    "env.classes",
    "env.p",
    "learner.algorithms",
    "learner.lambda",
    "learner.c_alpha",
    "schedule.kind",
    "schedule.s",
    "schedule.hold",
    "schedule.offset",
    "schedule.beta0",
    "schedule.beta0_scale",
    "sweep.axis",
    "sweep.grid",
    "sweep.horizon",
    "sweep.runs",
    "sweep.seed",
    "sweep.record_every",
    "sweep.reduction",
    "sweep.divergence_threshold",
    "sweep.share_env",
    "plot.log_y",
    "plot.trajectory_at",
    "tolerances.entry",
    "tolerances.residual",
];

fn parse_sections(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let mut section = String::new();
    let mut problems = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let key = if section.is_empty() {
                    k.trim().to_string()
                } else {
                    format!("{section}.{}", k.trim())
                };
                if map.insert(key.clone(), v.trim().to_string()).is_some() {
                    problems.push(format!("{key}: duplicate key (line {})", lineno + 1));
                }
            }
            None => problems.push(format!("line {}: expected `key = value`", lineno + 1)),
        }
    }
    if problems.is_empty() {
        Ok(map)
    } else {
        Err(Error::Config(problems))
    }
}

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
    problems: Vec<String>,
}

impl Reader<'_> {
    fn get<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> T
    where
        T: Default,
    {
        match self.map.get(key) {
            Some(v) => v.parse().unwrap_or_else(|_| {
                self.problems.push(format!("{key}: cannot parse `{v}`"));
                T::default()
            }),
            None => default.unwrap_or_else(|| {
                self.problems.push(format!("{key}: missing"));
                T::default()
            }),
        }
    }

    fn list(&mut self, key: &str) -> Vec<String> {
        match self.map.get(key) {
            Some(v) => v
                .split(',')
                .map(|x| x.trim().to_string())
                .filter(|x| !x.is_empty())
                .collect(),
            None => {
                self.problems.push(format!("{key}: missing"));
                Vec::new()
            }
        }
    }

    fn build(&mut self) -> ExperimentConfig {
        let id: String = self.get("id", None);
        let env_kind: String = self.get("env.kind", None);
        let env = match env_kind.as_str() {
            "mrp" => EnvSpec::Mrp {
                n_states: self.get("env.n_states", Some(100)),
                d: self.get("env.d", Some(20)),
            },
            "boyan" => EnvSpec::Boyan,
            "access" => {
                let default = AccessControl::default();
                EnvSpec::Access(AccessControl {
                    servers: self.get("env.servers", Some(default.servers)),
                    classes: self.get("env.classes", Some(default.classes)),
                    p: self.get("env.p", Some(default.p)),
                })
            }
            "pendulum" => EnvSpec::Pendulum,
            other => {
                self.problems.push(format!("env.kind: unknown environment `{other}`"));
                EnvSpec::Boyan
            }
        };
        let algorithms = self
            .list("learner.algorithms")
            .iter()
            .filter_map(|a| match Algorithm::parse(a) {
                Ok(a) => Some(a),
                Err(_) => {
                    self.problems.push(format!("learner.algorithms: unknown algorithm `{a}`"));
                    None
                }
            })
            .collect();
        let kind: String = self.get("schedule.kind", None);
        let schedule_kind = ScheduleKind::parse(&kind).unwrap_or_else(|| {
            self.problems.push(format!("schedule.kind: unknown schedule `{kind}`"));
            ScheduleKind::Constant
        });
        let axis_name: String = self.get("sweep.axis", Some("beta0".to_string()));
        let axis = match axis_name.as_str() {
            "beta0" => SweepAxis::Beta0,
            "c_alpha" => SweepAxis::CAlpha,
            other => {
                self.problems.push(format!("sweep.axis: unknown axis `{other}`"));
                SweepAxis::Beta0
            }
        };
        let grid = self
            .list("sweep.grid")
            .iter()
            .filter_map(|g| match g.parse::<f64>() {
                Ok(x) => Some(x),
                Err(_) => {
                    self.problems.push(format!("sweep.grid: cannot parse `{g}`"));
                    None
                }
            })
            .collect();
        let reduction_name: String = self.get("sweep.reduction", Some("final".to_string()));
        let reduction = Reduction::parse(&reduction_name).unwrap_or_else(|| {
            self.problems.push(format!("sweep.reduction: unknown reduction `{reduction_name}`"));
            Reduction::Final
        });
        let trajectory_at = self
            .map
            .get("plot.trajectory_at")
            .map(|_| self.get("plot.trajectory_at", None));
        let defaults = Tolerances::default();
        ExperimentConfig {
            id,
            env,
            algorithms,
            lambda: self.get("learner.lambda", Some(0.25)),
            c_alpha: self.get("learner.c_alpha", Some(1.0)),
            schedule_kind,
            exponent: self.get("schedule.s", Some(1.0)),
            hold: self.get("schedule.hold", Some(0)),
            offset: self.get("schedule.offset", Some(1)),
            beta0: self.get("schedule.beta0", Some(1.0)),
            beta0_scale: self.get("schedule.beta0_scale", Some(1.0)),
            axis,
            grid,
            horizon: self.get("sweep.horizon", None),
            n_runs: self.get("sweep.runs", None),
            seed: self.get("sweep.seed", Some(0)),
            record_every: self.get("sweep.record_every", Some(1)),
            reduction,
            divergence_threshold: self.get("sweep.divergence_threshold", Some(1e10)),
            share_env: self.get("sweep.share_env", Some(true)),
            trajectory_at,
            log_y: self.get("plot.log_y", Some(false)),
            tolerances: Tolerances {
                entry: self.get("tolerances.entry", Some(defaults.entry)),
                residual: self.get("tolerances.residual", Some(defaults.residual)),
            },
        }
    }
}
