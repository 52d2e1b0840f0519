//! Experiment configuration, Monte-Carlo sweeps and CSV output.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{matrix_label, Algorithm, ExperimentConfig, Metric};
pub use output::{analyze_matrix, check_guarantee, emit_csv, parse_sweep_csv, sweep_csv};
pub use sweep::{
    median, ratio_table, run_sweep, run_sweep_with_threads, run_trial, trial_outcome, GridPoint, SweepResult,
    TrialOutcome, TrialRecord,
};
