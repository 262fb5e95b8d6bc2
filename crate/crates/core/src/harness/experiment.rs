use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cache::load_or_solve_reference;
use super::config::{ExecutionSpec, ExperimentConfig};
use crate::error::{Error, Result};
use crate::linalg::{distance_sq, SpectralBounds};
use crate::objective::Dataset;
use crate::proximal::Regularizer;
use crate::runtime::{
    measured_max_delay, run_threads, simulate, Algorithm, RunOutput, RunSpec, TimingBreakdown,
};
use crate::solvers::{ReferenceSolution, StepSchedule};

pub const TRACE_HEADER: [&str; 6] = [
    "algorithm",
    "seed",
    "t",
    "wall_nanos",
    "distance_sq",
    "log_distance_sq",
];

/// Dataset, regularizer, curvature constants and `x*` for one config.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub dataset: Dataset,
    pub regularizer: Regularizer,
    pub bounds: SpectralBounds,
    pub reference: ReferenceSolution,
    pub reference_cached: bool,
    pub digest: String,
}

pub fn prepare_problem(cfg: &ExperimentConfig) -> Result<PreparedProblem> {
    cfg.validate()?;
    let dataset = cfg.load_dataset()?;
    let regularizer = cfg.regularizer.build(&dataset)?;
    let loaded = load_or_solve_reference(cfg, &dataset, &regularizer)?;
    Ok(PreparedProblem {
        dataset,
        regularizer,
        bounds: loaded.bounds,
        reference: loaded.solution,
        reference_cached: loaded.cached,
        digest: loaded.digest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub total_iterations: usize,
    pub initial_distance_sq: f64,
    /// `||x_T - x*||^2`; equals the last trace row of the run.
    pub final_distance_sq: f64,
    /// `||xbar_T - x*||^2` for the running average.
    pub average_distance_sq: f64,
    /// `(1 / (T + 1)) sum_t ||x_t - x*||^2`.
    pub mean_distance_sq: f64,
    pub max_delay: usize,
    pub timing: TimingBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub median_final_distance_sq: f64,
    pub median_average_distance_sq: f64,
}

/// Summary of a convergence experiment, written as `<prefix>_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub regularizer: String,
    pub l_constant: f64,
    pub mu_constant: f64,
    pub tau: usize,
    pub schedule: StepSchedule,
    pub reference_iterations: usize,
    pub reference_gradient_mapping_norm: f64,
    pub reference_objective: f64,
    pub reference_cached: bool,
    /// One entry per (algorithm, seed), algorithms in config order.
    pub runs: Vec<RunSummary>,
    pub algorithms: Vec<AlgorithmSummary>,
}

/// Median of the finite and non-finite values alike; NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> Result<PathBuf> {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    let p = PathBuf::from(s);
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(p)
}

fn execute(spec: &RunSpec<'_>, exec: &ExecutionSpec, seed: u64) -> Result<RunOutput> {
    match *exec {
        ExecutionSpec::Simulate { delay } => simulate(spec, &delay.model(seed)),
        ExecutionSpec::Threads { workers } => run_threads(spec, workers, seed),
    }
}

fn base_spec<'a>(
    cfg: &ExperimentConfig,
    p: &'a PreparedProblem,
    algorithm: Algorithm,
    schedule: StepSchedule,
) -> RunSpec<'a> {
    let mut spec = RunSpec::new(
        algorithm,
        &p.dataset,
        &p.regularizer,
        schedule,
        cfg.total_iterations,
        &p.reference.x,
    );
    spec.prox = cfg.prox;
    spec.log_every = cfg.log_every;
    spec.l_constant = Some(p.bounds.l_constant);
    spec
}

/// Runs every (algorithm, seed) pair, writing `<prefix>_trace.csv` and
/// `<prefix>_summary.json`.
///
/// Trace rows carry the number of applied updates `t` (the first row is the
/// starting point, `t = 0`) and the natural log of the squared distance.
pub fn run_convergence_experiment(cfg: &ExperimentConfig, out_prefix: &Path) -> Result<RunRecord> {
    let p = prepare_problem(cfg)?;
    let tau = cfg.execution.tau();
    let schedule = cfg.schedule.build(
        p.bounds.l_constant,
        p.bounds.mu_constant,
        tau,
        cfg.total_iterations,
    )?;

    let trace_path = with_suffix(out_prefix, "_trace.csv")?;
    let mut w = csv::Writer::from_path(&trace_path)?;
    w.write_record(TRACE_HEADER)?;

    let mut runs = Vec::with_capacity(cfg.algorithms.len() * cfg.seeds.len());
    for &algorithm in &cfg.algorithms {
        let spec = base_spec(cfg, &p, algorithm, schedule);
        for &seed in &cfg.seeds {
            let out = execute(&spec, &cfg.execution, seed)?;
            let trace = &out.trace;
            let name = algorithm.name();
            let seed_s = seed.to_string();
            let d0 = trace.initial_distance_sq;
            w.write_record([name, &seed_s, "0", "0", &d0.to_string(), &d0.ln().to_string()])?;
            for r in &trace.records {
                w.write_record([
                    name,
                    &seed_s,
                    &(r.t + 1).to_string(),
                    &r.wall_nanos.to_string(),
                    &r.distance_sq.to_string(),
                    &r.distance_sq.ln().to_string(),
                ])?;
            }
            runs.push(RunSummary {
                algorithm,
                seed,
                total_iterations: cfg.total_iterations,
                initial_distance_sq: d0,
                final_distance_sq: trace.final_distance_sq(),
                average_distance_sq: distance_sq(&trace.running_average, &p.reference.x),
                mean_distance_sq: trace.mean_distance_sq,
                max_delay: measured_max_delay(&out.log).unwrap_or(0),
                timing: out.timing,
            });
        }
    }
    w.flush().map_err(|e| Error::io(&trace_path, e))?;

    let algorithms = cfg
        .algorithms
        .iter()
        .map(|&a| {
            let of = |f: fn(&RunSummary) -> f64| {
                median(&runs.iter().filter(|r| r.algorithm == a).map(f).collect::<Vec<_>>())
            };
            AlgorithmSummary {
                algorithm: a,
                median_final_distance_sq: of(|r| r.final_distance_sq),
                median_average_distance_sq: of(|r| r.average_distance_sq),
            }
        })
        .collect();

    let record = RunRecord {
        config_digest: p.digest.clone(),
        regularizer: p.regularizer.name().to_string(),
        l_constant: p.bounds.l_constant,
        mu_constant: p.bounds.mu_constant,
        tau,
        schedule,
        reference_iterations: p.reference.iterations,
        reference_gradient_mapping_norm: p.reference.gradient_mapping_norm,
        reference_objective: p.reference.objective,
        reference_cached: p.reference_cached,
        runs,
        algorithms,
    };
    let summary_path = with_suffix(out_prefix, "_summary.json")?;
    fs::write(&summary_path, serde_json::to_vec_pretty(&record)?)
        .map_err(|e| Error::io(&summary_path, e))?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub algorithm: Algorithm,
    pub regularizer: String,
    pub workers: usize,
    /// Median wall time over the seeds.
    pub wall_seconds: f64,
    /// `wall(1 worker) / wall(workers)`.
    pub speedup: f64,
    /// Fraction of wall time spent in the master critical section.
    pub master_share: f64,
    pub master_critical_cpu_nanos_per_update: f64,
    pub max_delay: usize,
}

/// Threaded runs for every algorithm and worker count, written to
/// `<prefix>_speedup.csv`. One schedule, admissible for the largest worker
/// count, is shared by all runs.
pub fn run_speedup_experiment(
    cfg: &ExperimentConfig,
    worker_counts: &[usize],
    out_prefix: &Path,
) -> Result<Vec<SpeedupRow>> {
    if !worker_counts.contains(&1) {
        return Err(Error::Config(
            "worker_counts must include 1, the speedup baseline".into(),
        ));
    }
    if worker_counts.contains(&0) {
        return Err(Error::Config("worker counts must be positive".into()));
    }
    if cfg.algorithms.contains(&Algorithm::Psgd) {
        return Err(Error::Config("speedup runs are threaded; psgd is not supported".into()));
    }
    let p = prepare_problem(cfg)?;
    let tau = *worker_counts.iter().max().unwrap();
    let schedule = cfg.schedule.build(
        p.bounds.l_constant,
        p.bounds.mu_constant,
        tau,
        cfg.total_iterations,
    )?;

    let mut rows = Vec::new();
    for &algorithm in &cfg.algorithms {
        let mut spec = base_spec(cfg, &p, algorithm, schedule);
        spec.track_average = false;
        let mut measured = Vec::with_capacity(worker_counts.len());
        for &workers in worker_counts {
            let mut walls = Vec::new();
            let mut shares = Vec::new();
            let mut cpu = Vec::new();
            let mut max_delay = 0;
            for &seed in &cfg.seeds {
                let out = run_threads(&spec, workers, seed)?;
                walls.push(out.timing.wall_nanos as f64 * 1e-9);
                shares.push(out.timing.critical_share());
                cpu.push(out.timing.critical_cpu_nanos_per_update());
                max_delay = max_delay.max(measured_max_delay(&out.log).unwrap_or(0));
            }
            measured.push((workers, median(&walls), median(&shares), median(&cpu), max_delay));
        }
        let base = measured.iter().find(|m| m.0 == 1).unwrap().1;
        for (workers, wall, share, cpu, max_delay) in measured {
            rows.push(SpeedupRow {
                algorithm,
                regularizer: p.regularizer.name().to_string(),
                workers,
                wall_seconds: wall,
                speedup: if workers == 1 { 1.0 } else { base / wall },
                master_share: share,
                master_critical_cpu_nanos_per_update: cpu,
                max_delay,
            });
        }
    }

    let path = with_suffix(out_prefix, "_speedup.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
