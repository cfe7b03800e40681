//! Config-driven experiment harness.
//!
//! A TOML config describes one experiment (problem, methods, window,
//! regularization strategy, budget, seeds); the runner executes every
//! (method, seed) cell and streams an append-only CSV trace with schema
//! `method,seed,epoch,data_queries,wall_time_s,objective_gap,status`.
//! Reruns of the same config are byte-identical except for the wall-time
//! column. The summarizer reports median threshold crossings per method,
//! and the bound-verification report writes Monte-Carlo `lhs <= rhs` rows
//! for the extrapolation bounds.

mod config;
mod run;
mod summary;
mod verify;

pub use config::{
    Budget, ExperimentConfig, LambdaSelection, LossKind, ProblemSpec, RegimeKind, SpectrumKind,
};
pub use run::{
    run_experiment, run_experiment_in_memory, RecordStatus, RunStats, TraceRecord, TRACE_HEADER,
};
pub use summary::{
    summarize_file, summarize_records, write_summary_csv, MethodSummary, ThresholdRow,
    GAP_THRESHOLDS,
};
pub use verify::{verify_bounds, verify_rows, VerifyConfig, VerifyStats};
