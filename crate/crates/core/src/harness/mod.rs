//! Sweeps over step sizes and step-size ratios with seeded, parallel runs.

pub mod config;
pub mod output;
pub mod presets;
pub mod seed;
pub mod sweep;

pub use config::{EnvSpec, ExperimentConfig, Reduction, SweepAxis};
pub use output::{emit_all, emit_csv, emit_plot_script, parse_csv, CsvRow, CSV_HEADER};
pub use presets::{desk_scale, figure_presets, preset, PRESET_NAMES};
pub use seed::{env_seed, run_seed};
pub use sweep::{run_sweep, run_sweep_with_workers, summarize, CellResult, SweepResult};
