//! Monte Carlo benchmark harness: configuration, the compared pipelines,
//! experiment runners and result files.

pub mod config;
pub mod experiment;
pub mod output;
pub mod pipeline;

pub use config::{ExperimentConfig, ExperimentKind, RawConfig};
pub use experiment::{
    plan_cells, run_cell_trials, run_experiment, summarize_cell, thread_pool, Cell, CellKey, ExperimentOutput, PipelineReport,
};
pub use output::{ecdf_csv, pareto_csv, results_csv, summary_json, write_outputs, ARTIFACT_VERSION};
pub use pipeline::{run_pipeline, run_trial, PipelineContext, PipelineId, PipelineSettings, Timings, TrialResult};
