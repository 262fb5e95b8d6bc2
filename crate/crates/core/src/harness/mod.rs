//! Experiment configuration, convergence and speedup experiments, the
//! reference-solution cache and the proximal oracle check.

mod cache;
mod config;
mod experiment;
mod prox_check;

pub use cache::{config_digest, load_or_solve_reference, CachedReference, LoadedReference};
pub use config::{
    DelaySpec, ExecutionSpec, ExperimentConfig, ProblemSpec, RegularizerSpec, ScheduleSpec,
};
pub use experiment::{
    median, prepare_problem, run_convergence_experiment, run_speedup_experiment, AlgorithmSummary,
    PreparedProblem, RunRecord, RunSummary, SpeedupRow, TRACE_HEADER,
};
pub use prox_check::{prox_check, random_instance, ProxCheckRow, ProxInstance, VARIANTS};
