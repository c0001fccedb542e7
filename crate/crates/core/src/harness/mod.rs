//! Experiment driver: configuration, seeded trials, aggregation and sweeps.

pub mod bench;
pub mod config;
pub mod report;
pub mod run;

pub use bench::{sweep, Sweep, SweepPoint};
pub use config::{ExperimentConfig, Flips, Pipeline, Setting};
pub use report::{aggregate, report_csv, report_table, ConfigReport, Summary};
pub use run::{generate_problem, records_from_csv, records_to_csv, run_experiment, run_trial, Problem, RunRecord};
