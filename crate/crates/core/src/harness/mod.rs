//! Experiment runner, statistics, convergence studies, file output and CLI.

pub mod cli;
pub mod config;
pub mod convergence;
pub mod output;
pub mod run;
pub mod stats;

pub use config::{RunConfig, TimeGrid};
pub use convergence::{convergence_study, ConvergenceTable};
pub use output::{run_trials, RunOutput};
pub use run::{run_statistics, Runner, Statistics};
