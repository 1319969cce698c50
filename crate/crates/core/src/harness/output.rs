//! CSV, plot-script and JSON artifacts of a sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use crate::error::{Error, Result};
use crate::markov::OracleSolution;

use super::config::{EnvSpec, SweepAxis};
use super::sweep::SweepResult;

pub const CSV_HEADER: &str = "experiment,algo,beta0,run,t,metric,diverged";

/// Version string in `git describe` form when built from a checkout.
pub const VERSION: &str = match option_env!("TDLAB_GIT_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One row per recorded point, ordered by algorithm, grid value, run and
/// iteration.
pub fn csv_string(result: &SweepResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    let id = &result.config.id;
    for cell in &result.cells {
        for (run, rec) in cell.records.iter().enumerate() {
            for (t, v) in result.recorded_t.iter().zip(&rec.values) {
                writeln!(
                    s,
                    "{id},{},{:.16e},{run},{t},{v:.16e},{}",
                    cell.algorithm, cell.grid_value, rec.diverged as u8
                )
                .unwrap();
            }
        }
    }
    s
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &csv_string(result))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub algo: String,
    pub beta0: f64,
    pub run: usize,
    pub t: usize,
    pub metric: f64,
    pub diverged: bool,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config(vec!["csv: unexpected header".into()]));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Config(vec![format!("csv line {}: malformed `{line}`", i + 2)]);
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad());
            }
            Ok(CsvRow {
                experiment: f[0].to_string(),
                algo: f[1].to_string(),
                beta0: f[2].parse().map_err(|_| bad())?,
                run: f[3].parse().map_err(|_| bad())?,
                t: f[4].parse().map_err(|_| bad())?,
                metric: f[5].parse().map_err(|_| bad())?,
                diverged: match f[6] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                },
            })
        })
        .collect()
}

pub const SUMMARY_HEADER: &str = "experiment,algo,beta0,n_runs,mean,sd,ci95,divergences";

pub fn summary_csv_string(result: &SweepResult) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for c in &result.cells {
        writeln!(
            s,
            "{},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{}",
            result.config.id,
            c.algorithm,
            c.grid_value,
            c.metrics.len(),
            c.mean,
            c.sd,
            c.ci_half_width,
            c.divergences
        )
        .unwrap();
    }
    s
}

pub fn emit_summary_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &summary_csv_string(result))
}

/// Matplotlib script drawing the per-grid summary (left) and the
/// trajectory at one grid value (right), each with 95% bands. The CSV
/// names are resolved relative to the script.
pub fn plot_script_string(result: &SweepResult, csv_name: &str, summary_name: &str) -> String {
    let cfg = &result.config;
    let x_label = match cfg.axis {
        SweepAxis::Beta0 if cfg.env.is_control() => "Effective initial step-size",
        SweepAxis::Beta0 => "Initial step-size",
        SweepAxis::CAlpha => "Step-size ratio c_alpha",
    };
    let y_label = match cfg.env {
        EnvSpec::Access(_) | EnvSpec::Pendulum => "Average reward",
        _ => "Loss value",
    };
    let traj = cfg
        .trajectory_at
        .map_or("None".to_string(), |v| format!("{v:?}"));
    let log_y = if cfg.log_y { "True" } else { "False" };
    format!(
        r#"#!/usr/bin/env python3
# {id}: generated by tdlab {version}
import csv
import math
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, "{csv}")
SUMMARY = os.path.join(HERE, "{summary}")
TRAJECTORY_AT = {traj}
LOG_Y = {log_y}

summary = defaultdict(list)
with open(SUMMARY) as f:
    for row in csv.DictReader(f):
        summary[row["algo"]].append(
            (float(row["beta0"]), float(row["mean"]), float(row["ci95"]))
        )

fig, axes = plt.subplots(1, 2 if TRAJECTORY_AT is not None else 1, figsize=(11, 4), squeeze=False)
ax = axes[0][0]
for algo, pts in summary.items():
    pts.sort()
    x = [p[0] for p in pts]
    m = [p[1] for p in pts]
    lo = [p[1] - p[2] for p in pts]
    hi = [p[1] + p[2] for p in pts]
    ax.plot(x, m, label=algo)
    ax.fill_between(x, lo, hi, alpha=0.2)
ax.set_xlabel("{x_label}")
ax.set_ylabel("{y_label}")
if LOG_Y:
    ax.set_yscale("log")
ax.legend()

if TRAJECTORY_AT is not None:
    series = defaultdict(lambda: defaultdict(list))
    with open(CSV) as f:
        for row in csv.DictReader(f):
            if abs(float(row["beta0"]) - TRAJECTORY_AT) < 1e-9:
                series[row["algo"]][int(row["t"])].append(float(row["metric"]))
    ax = axes[0][1]
    for algo, by_t in series.items():
        ts = sorted(by_t)
        mean, half = [], []
        for t in ts:
            v = by_t[t]
            mu = sum(v) / len(v)
            sd = math.sqrt(sum((x - mu) ** 2 for x in v) / (len(v) - 1)) if len(v) > 1 else 0.0
            mean.append(mu)
            half.append(1.96 * sd / math.sqrt(len(v)))
        ax.plot(ts, mean, label=algo)
        ax.fill_between(ts, [m - h for m, h in zip(mean, half)], [m + h for m, h in zip(mean, half)], alpha=0.2)
    ax.set_xlabel("Iteration")
    ax.set_ylabel("{y_label}")
    ax.set_title("{x_label} = %g" % TRAJECTORY_AT)
    if LOG_Y:
        ax.set_yscale("log")
    ax.legend()

fig.tight_layout()
fig.savefig(os.path.join(HERE, "{id}.png"), dpi=150)
"#,
        id = cfg.id,
        version = VERSION,
        csv = csv_name,
        summary = summary_name,
    )
}

pub fn emit_plot_script(result: &SweepResult, path: &Path, csv_name: &str, summary_name: &str) -> Result<()> {
    write_file(path, &plot_script_string(result, csv_name, summary_name))
}

pub fn meta_json(result: &SweepResult) -> String {
    let cfg = &result.config;
    let doc = json!({
        "experiment": cfg.id,
        "version": VERSION,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_text(),
        "recorded_points": result.recorded_t.len(),
    });
    serde_json::to_string_pretty(&doc).expect("json value") + "\n"
}

pub fn emit_meta(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &meta_json(result))
}

pub fn oracle_json(oracle: &OracleSolution, seed: u64, config_hash: &str) -> String {
    let doc = json!({
        "pi": oracle.pi.as_slice(),
        "omega": oracle.omega,
        "v": oracle.v.as_slice(),
        "theta_star": oracle.theta_star.as_slice(),
        "theta_e": oracle.theta_e.as_slice(),
        "delta": oracle.delta,
        "calpha_min": oracle.calpha_min,
        "seed": seed,
        "config-hash": config_hash,
    });
    serde_json::to_string_pretty(&doc).expect("json value") + "\n"
}

/// Writes `<dir>/<id>.csv`, `.summary.csv`, `.plot` and `.meta.json`.
pub fn emit_all(result: &SweepResult, dir: &Path) -> Result<()> {
    let id = &result.config.id;
    let csv_name = format!("{id}.csv");
    let summary_name = format!("{id}.summary.csv");
    emit_csv(result, &dir.join(&csv_name))?;
    emit_summary_csv(result, &dir.join(&summary_name))?;
    emit_plot_script(result, &dir.join(format!("{id}.plot")), &csv_name, &summary_name)?;
    emit_meta(result, &dir.join(format!("{id}.meta.json")))
}
