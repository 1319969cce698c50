use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdlab::harness::output::{csv_string, plot_script_string};
use tdlab::harness::{
    emit_csv, figure_presets, parse_csv, preset, run_seed, run_sweep_with_workers, summarize, EnvSpec,
    ExperimentConfig, Reduction, SweepResult, CSV_HEADER,
};
use tdlab::td::Algorithm;
use tdlab::Error;

fn small_config() -> ExperimentConfig {
    let mut c = preset("fig2-mrp-constant").unwrap();
    c.id = "small".into();
    c.env = EnvSpec::Mrp { n_states: 12, d: 4 };
    c.algorithms = vec![Algorithm::STANDARD, Algorithm::IMPLICIT];
    c.grid = vec![0.5, 2.5];
    c.horizon = 120;
    c.n_runs = 3;
    c.record_every = 25;
    c.seed = 11;
    c
}

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("tdlab-harness-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn csv_round_trip_and_row_count() {
    let result = run_sweep_with_workers(&small_config(), 2).unwrap();
    let path = temp_path("round.csv");
    emit_csv(&result, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = parse_csv(&text).unwrap();

    let expected: usize = result.cells.iter().map(|c| c.records.len() * result.recorded_t.len()).sum();
    assert_eq!(rows.len(), expected);
    assert_eq!(result.recorded_t, vec![0, 25, 50, 75, 100, 120]);

    let mut it = rows.iter();
    for cell in &result.cells {
        for (run, rec) in cell.records.iter().enumerate() {
            for (&t, &v) in result.recorded_t.iter().zip(&rec.values) {
                let row = it.next().unwrap();
                assert_eq!(row.experiment, "small");
                assert_eq!(row.algo, cell.algorithm);
                assert_eq!(row.beta0, cell.grid_value);
                assert_eq!((row.run, row.t), (run, t));
                assert_eq!(row.metric, v, "17 digits must round-trip exactly");
                assert_eq!(row.diverged, rec.diverged);
            }
        }
    }
}

#[test]
fn empty_result_is_header_only() {
    let result = SweepResult {
        config: small_config(),
        recorded_t: Vec::new(),
        cells: Vec::new(),
    };
    let path = temp_path("empty.csv");
    emit_csv(&result, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{CSV_HEADER}\n"));
    assert!(parse_csv(&format!("{CSV_HEADER}\n")).unwrap().is_empty());
}

#[test]
fn emit_reports_the_path_on_failure() {
    let result = run_sweep_with_workers(&small_config(), 1).unwrap();
    let blocker = temp_path("blocker");
    std::fs::write(&blocker, "x").unwrap();
    let bad = blocker.join("sub").join("out.csv");
    match emit_csv(&result, &bad) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("blocker")),
        other => panic!("expected an io error, got {other:?}"),
    }
}

/// Welford's running mean and variance.
fn streaming(values: &[f64]) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for &x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    (mean, if n > 1.0 { (m2 / (n - 1.0)).sqrt() } else { 0.0 })
}

#[test]
fn aggregation_matches_a_streaming_pass() {
    let mut config = small_config();
    config.n_runs = 7;
    config.reduction = Reduction::TailMean(30);
    let result = run_sweep_with_workers(&config, 3).unwrap();
    for cell in &result.cells {
        assert_eq!(cell.metrics.len(), 7);
        let (mean, sd) = streaming(&cell.metrics);
        let scale = 1.0 + mean.abs();
        assert!((cell.mean - mean).abs() <= 1e-12 * scale);
        assert!((cell.sd - sd).abs() <= 1e-12 * (1.0 + sd));
        assert!((cell.ci_half_width - 1.96 * sd / 7f64.sqrt()).abs() <= 1e-12 * (1.0 + sd));
        assert!(cell.divergences <= 7);
        assert_eq!(cell.divergences, cell.records.iter().filter(|r| r.diverged).count());
    }
}

#[test]
fn degenerate_summaries() {
    assert_eq!(summarize(&[3.5]), (3.5, 0.0, 0.0));
    let (mean, sd, ci) = summarize(&[2.0; 9]);
    assert_eq!((mean, sd, ci), (2.0, 0.0, 0.0));

    let mut config = small_config();
    config.n_runs = 1;
    let result = run_sweep_with_workers(&config, 1).unwrap();
    assert!(result.cells.iter().all(|c| c.sd == 0.0 && c.ci_half_width == 0.0));
}

#[test]
fn output_is_independent_of_worker_count() {
    let mut config = small_config();
    config.env = EnvSpec::Boyan;
    config.share_env = false;
    let one = csv_string(&run_sweep_with_workers(&config, 1).unwrap());
    for workers in [2, 5] {
        assert_eq!(one, csv_string(&run_sweep_with_workers(&config, workers).unwrap()));
    }
    config.seed += 1;
    assert_ne!(one, csv_string(&run_sweep_with_workers(&config, 2).unwrap()));
}

#[test]
fn run_streams_are_distinct_across_every_preset() {
    for config in figure_presets() {
        let mut seen = HashSet::new();
        let mut total = 0;
        for algo in &config.algorithms {
            for &g in &config.grid {
                for run in 0..config.n_runs {
                    let seed = run_seed(config.seed, &config.id, &algo.label(), g, run);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let draws: [u64; 4] = std::array::from_fn(|_| rng.random());
                    seen.insert(draws);
                    total += 1;
                }
            }
        }
        assert_eq!(seen.len(), total, "{}", config.id);
    }
}

#[test]
fn plot_script_is_stable_and_complete() {
    let config = small_config();
    let result = run_sweep_with_workers(&config, 2).unwrap();
    let a = plot_script_string(&result, "small.csv", "small.summary.csv");
    let again = run_sweep_with_workers(&config, 4).unwrap();
    assert_eq!(a, plot_script_string(&again, "small.csv", "small.summary.csv"));

    assert!(a.contains(r#"os.path.join(HERE, "small.csv")"#));
    assert!(a.contains("LOG_Y = True"));
    assert!(a.contains("label=algo"));
    // The legend gets one entry per algorithm label present in the summary.
    let labels: HashSet<&str> = result.cells.iter().map(|c| c.algorithm.as_str()).collect();
    assert_eq!(labels.len(), config.algorithms.len());

    let mut linear = config.clone();
    linear.log_y = false;
    let b = plot_script_string(&run_sweep_with_workers(&linear, 1).unwrap(), "small.csv", "small.summary.csv");
    assert!(b.contains("LOG_Y = False"));
}

#[test]
fn config_errors_name_their_keys() {
    let mut c = small_config();
    c.n_runs = 0;
    c.grid.clear();
    c.lambda = 1.0;
    let msg = c.validate().unwrap_err().to_string();
    for key in ["sweep.runs", "sweep.grid", "learner.lambda"] {
        assert!(msg.contains(key), "{key} missing from `{msg}`");
    }
    assert!(run_sweep_with_workers(&c, 1).is_err());

    let text = small_config().to_text();
    assert_eq!(ExperimentConfig::parse(&text).unwrap(), small_config());
    let err = ExperimentConfig::parse(&format!("{text}\n[sweep]\nbogus = 1\n")).unwrap_err();
    assert!(err.to_string().contains("bogus"));
}
