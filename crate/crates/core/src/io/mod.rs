//! File formats, experiment configs and the command-line driver.

pub mod config;
pub mod pgrid;
pub mod run;
pub mod selftest;
pub mod tables;

pub use config::ExperimentConfig;
pub use run::{exit_code, run_experiment, RunOptions, RunReport};
