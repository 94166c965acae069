//! Experiment orchestration, metrics, CSV output and plotting.

mod config;
mod experiment;
mod metrics;
mod plot;
mod table;

pub use config::{
    default_grid_schedule, default_pointmass_schedule, EnvOverrides, ExperimentConfig,
    ExperimentKind, Plan, RcSettings, TheoremSettings, DEFAULT_FLIP_PROB, DEFAULT_N_EVAL,
    DEFAULT_POINTMASS_LABEL_NOISE,
};
pub use experiment::{
    heldout_count, run_experiment, run_trial, run_trials, theorem_csv, trial_setup, worker_count,
    FinalPolicy, RunSummary, TrialManifest, TrialReport, WORKERS_ENV,
};
pub use metrics::{
    episode_return, grid_shift_needed, heldout_surrogate_loss, normalize, normalized_performance,
    paired_returns, pearson_correlation, Exact, Normalized,
};
pub use plot::{render_plot, summarize, svg_from_rows, SeriesPoint};
pub use table::{
    read_results, write_results, write_theorem_table, Algorithm, ResultRow, RESULT_HEADER,
    THEOREM_HEADER,
};
