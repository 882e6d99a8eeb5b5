//! Experiment runner, report files and the command-line front end.

pub mod cli;
pub mod experiment;
pub mod report;

pub use experiment::{
    run_experiment, run_experiment_on, run_once, ExperimentConfig, ExperimentReport, Method, RunOutcome,
    RunRecord,
};
pub use report::{emit_report, read_report};
