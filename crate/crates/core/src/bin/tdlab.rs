use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tdlab::control::{ControlSpec, ControlTask};
use tdlab::harness::output::oracle_json;
use tdlab::harness::seed::{env_seed, run_seed, Fnv1a};
use tdlab::harness::sweep::{build_boyan_problem, build_mrp_problem};
use tdlab::harness::{desk_scale, emit_all, preset, run_sweep, ExperimentConfig, Reduction, PRESET_NAMES};
use tdlab::markov::Tolerances;
use tdlab::td::{run_evaluation, Algorithm, EvalProblem, EvalSpec, RunRecord, ScheduleKind, StepSchedule};
use tdlab::{Error, Result};

#[derive(Parser)]
#[command(name = "tdlab", version, about = "Average-reward TD(lambda) experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact stationary law, average reward, weights and stability margin.
    Oracle(OracleArgs),
    /// Policy-evaluation runs on one problem.
    Eval(EvalArgs),
    /// SARSA(lambda) runs on a control environment.
    Control(ControlArgs),
    /// Run a preset or a config file and write CSV, plot script and metadata.
    Sweep(SweepArgs),
    /// List the built-in presets.
    Presets {
        #[arg(long)]
        list: bool,
        /// Print one preset's configuration text.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalEnv {
    Mrp,
    Boyan,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "mrp")]
    env: EvalEnv,
    #[arg(long, default_value_t = 100)]
    n_states: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ProblemArgs {
    fn describe(&self, role: &str) -> String {
        let env = match self.env {
            EvalEnv::Mrp => format!("mrp n_states={} d={}", self.n_states, self.d),
            EvalEnv::Boyan => "boyan".to_string(),
        };
        format!("{role} {env} lambda={} seed={}", self.lambda, self.seed)
    }

    fn build(&self, role: &str) -> Result<EvalProblem> {
        let tol = Tolerances::default();
        match self.env {
            EvalEnv::Mrp => build_mrp_problem(
                self.n_states,
                self.d,
                self.lambda,
                env_seed(self.seed, role, "chain", 0),
                env_seed(self.seed, role, "features", 0),
                &tol,
            ),
            EvalEnv::Boyan => build_boyan_problem(self.lambda, env_seed(self.seed, role, "policy", 0), &tol),
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// JSON output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the feature matrix as CSV.
    #[arg(long)]
    dump_features: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// standard, implicit, implicit-proj[-R] or implicit-joint[-R].
    #[arg(long, default_value = "implicit")]
    algo: String,
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    c_alpha: f64,
    #[arg(long, default_value = "constant")]
    schedule: String,
    #[arg(long, default_value_t = 0.99)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    hold: usize,
    #[arg(long, default_value_t = 1)]
    offset: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControlEnvArg {
    Access,
    Pendulum,
}

#[derive(Args)]
struct ControlArgs {
    #[arg(long, value_enum)]
    env: ControlEnvArg,
    /// standard, implicit or implicit-proj[-R].
    #[arg(long, default_value = "implicit")]
    variant: String,
    /// Effective initial step size; the schedule uses `400 * beta0 / (t + 400)^0.99`.
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    c_alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 15000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    desk_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-run metric: final, mean or tail:<k>.
    #[arg(long)]
    reduction: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(p, text).map_err(|e| Error::io(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn records_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("run,t,metric,diverged\n");
    for (run, r) in records.iter().enumerate() {
        for (t, v) in r.values.iter().enumerate() {
            writeln!(s, "{run},{t},{v:.16e},{}", r.diverged as u8).unwrap();
        }
    }
    s
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let problem = args.problem.build("oracle")?;
    if let Some(path) = &args.dump_features {
        problem.features.write_csv(path)?;
    }
    let hash = format!("{:016x}", Fnv1a::default().str(&args.problem.describe("oracle")).finish());
    write_or_print(args.out.as_deref(), &oracle_json(&problem.oracle, args.problem.seed, &hash))
}

fn eval(args: &EvalArgs) -> Result<()> {
    let algorithm = Algorithm::parse(&args.algo)?;
    let kind = ScheduleKind::parse(&args.schedule)
        .ok_or_else(|| Error::Config(vec![format!("schedule: unknown `{}`", args.schedule)]))?;
    let schedule = StepSchedule {
        kind,
        beta0: args.beta0,
        s: args.s,
        hold: args.hold,
        offset: args.offset,
        c_alpha: args.c_alpha,
    };
    let problem = args.problem.build("eval")?;
    let spec = EvalSpec::new(algorithm, schedule, args.problem.lambda, args.steps);
    let records = (0..args.runs)
        .map(|r| {
            let seed = run_seed(args.problem.seed, "eval", &algorithm.label(), args.beta0, r);
            run_evaluation(&problem, &spec, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    for (r, rec) in records.iter().enumerate() {
        eprintln!(
            "run {r}: initial loss {:.4e}, final loss {:.4e}{}",
            rec.values[0],
            rec.final_value(),
            if rec.diverged { " (diverged)" } else { "" }
        );
    }
    write_or_print(args.out.as_deref(), &records_csv(&records))
}

fn control(args: &ControlArgs) -> Result<()> {
    let algorithm = Algorithm::parse(&args.variant)?;
    let task = match args.env {
        ControlEnvArg::Access => ControlTask::parse("access")?,
        ControlEnvArg::Pendulum => ControlTask::Pendulum,
    };
    let schedule = StepSchedule::offset_poly(400.0 * args.beta0, 0.99, 400, 150, args.c_alpha);
    let spec = ControlSpec {
        projection: algorithm.projection,
        ..ControlSpec::new(algorithm.variant, schedule, args.lambda, args.steps)
    };
    let records = (0..args.runs)
        .map(|r| task.run(&spec, run_seed(args.seed, task.name(), &algorithm.label(), args.beta0, r)))
        .collect::<Result<Vec<_>>>()?;
    for (r, rec) in records.iter().enumerate() {
        eprintln!(
            "run {r}: tail reward {:.5}{}",
            tdlab::control::tail_mean(&rec.values, tdlab::control::TAIL_WINDOW),
            if rec.diverged { " (diverged)" } else { "" }
        );
    }
    write_or_print(args.out.as_deref(), &records_csv(&records))
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut config = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            ExperimentConfig::parse(&text)?
        }
        (None, None) => unreachable!("clap requires one of --preset/--config"),
    };
    if args.desk_scale {
        config = desk_scale(config);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(r) = &args.reduction {
        config.reduction = Reduction::parse(r)
            .ok_or_else(|| Error::Config(vec![format!("reduction: unknown `{r}`")]))?;
    }
    let result = run_sweep(&config)?;
    emit_all(&result, &args.out)?;
    for c in &result.cells {
        eprintln!(
            "{:<22} {:>8.4} mean {:>12.5e} ci95 {:>10.3e} diverged {}/{}",
            c.algorithm,
            c.grid_value,
            c.mean,
            c.ci_half_width,
            c.divergences,
            c.metrics.len()
        );
    }
    Ok(())
}

fn presets(list: bool, show: Option<&str>) -> Result<()> {
    if let Some(name) = show {
        print!("{}", preset(name)?.to_text());
    } else if list || show.is_none() {
        for name in PRESET_NAMES {
            println!("{name}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Oracle(a) => oracle(a),
        Command::Eval(a) => eval(a),
        Command::Control(a) => control(a),
        Command::Sweep(a) => sweep(a),
        Command::Presets { list, show } => presets(*list, show.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
