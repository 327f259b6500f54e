//! Experiment runner: parses flat experiment files, sweeps the UT power
//! budget for each optimization mode and writes CSV results and traces.

pub mod error;
pub mod run;
pub mod spec;

pub use error::CliError;
pub use run::{build_instance, jobs, run, run_all, run_job, Instance, Job, RunResult};
pub use spec::{parse_spec, parse_spec_str, ExperimentSpec, RunMode};
