//! Bounded-delay execution of the master/worker recursions.
//!
//! [`simulate`] replays the master recursion deterministically on one thread,
//! choosing the stale snapshot `d(t)` for every update from a [`DelayModel`].
//! [`run_threads`] runs real worker threads against a parameter store guarded
//! by a single lock. Both produce an [`IterateTrace`] and an [`EventLog`].

mod clock;
mod simulate;
mod threads;

pub use clock::thread_cpu_nanos;
pub use simulate::{simulate, simulate_with_samples};
pub use threads::run_threads;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Dataset;
use crate::proximal::{ProxSolveConfig, Regularizer};
use crate::solvers::{IterateTrace, StepSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Synchronous proximal SGD; always uses the current iterate.
    Psgd,
    /// Workers send gradients, the master applies the proximal step.
    Tap,
    /// Workers send prox innovations, the master only adds them.
    Dap,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Psgd => "psgd",
            Algorithm::Tap => "tap",
            Algorithm::Dap => "dap",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the stale snapshot `d(t)` is chosen in simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayModel {
    /// `d(t)` uniform on `[max(0, t - tau), t]`.
    UniformBounded { tau: usize, seed: u64 },
    /// `workers` virtual workers each holding one job (snapshot index and
    /// sample); jobs are delivered in random order subject to the bound
    /// `tau = workers`.
    WorkerQueue { workers: usize, seed: u64 },
}

impl DelayModel {
    pub fn tau(&self) -> usize {
        match *self {
            DelayModel::UniformBounded { tau, .. } => tau,
            DelayModel::WorkerQueue { workers, .. } => workers,
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            DelayModel::UniformBounded { seed, .. } | DelayModel::WorkerQueue { seed, .. } => seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryKind {
    /// A plain gradient for a proximal master step.
    Gradient,
    /// A DAP innovation added by the master.
    Innovation,
    /// A synchronous P-SGD step on the current iterate.
    Synchronous,
}

impl DeliveryKind {
    fn for_algorithm(a: Algorithm) -> Self {
        match a {
            Algorithm::Psgd => DeliveryKind::Synchronous,
            Algorithm::Tap => DeliveryKind::Gradient,
            Algorithm::Dap => DeliveryKind::Innovation,
        }
    }
}

/// One master update as seen by the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub t: usize,
    /// Snapshot index `d(t)`.
    pub source: usize,
    pub worker: usize,
    /// 0-based sample index used for the contribution.
    pub sample: usize,
    pub kind: DeliveryKind,
}

impl Event {
    #[inline]
    pub fn delay(&self) -> usize {
        self.t - self.source
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub tau: usize,
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn samples(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.sample).collect()
    }
}

/// Largest observed `t - d(t)`; `None` for an empty log.
pub fn measured_max_delay(log: &EventLog) -> Option<usize> {
    log.events.iter().map(Event::delay).max()
}

/// Where time and proximal evaluations went during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub wall_nanos: u64,
    pub master_updates: u64,
    /// Wall time spent applying updates while holding the parameter lock.
    pub master_critical_nanos: u64,
    /// Thread CPU time of the same sections; excludes preemption.
    pub master_critical_cpu_nanos: u64,
    /// Proximal evaluations made on the master thread inside its critical
    /// sections.
    pub master_prox_calls: u64,
    pub worker_jobs: u64,
    pub worker_compute_nanos: u64,
    pub worker_compute_cpu_nanos: u64,
    pub worker_prox_calls: u64,
}

impl TimingBreakdown {
    pub fn critical_nanos_per_update(&self) -> f64 {
        self.master_critical_nanos as f64 / self.master_updates.max(1) as f64
    }

    pub fn critical_cpu_nanos_per_update(&self) -> f64 {
        self.master_critical_cpu_nanos as f64 / self.master_updates.max(1) as f64
    }

    /// Fraction of the run's wall time spent in the master critical section.
    pub fn critical_share(&self) -> f64 {
        if self.wall_nanos == 0 {
            0.0
        } else {
            self.master_critical_nanos as f64 / self.wall_nanos as f64
        }
    }
}

/// Everything a run needs besides the delay mechanism.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub algorithm: Algorithm,
    pub dataset: &'a Dataset,
    pub regularizer: &'a Regularizer,
    pub schedule: StepSchedule,
    pub total_iterations: usize,
    pub prox: ProxSolveConfig,
    /// `x*` the distances are measured against.
    pub reference: &'a [f64],
    pub log_every: usize,
    /// Gradient Lipschitz constant, when known, for the `eta <= 1/L` check.
    pub l_constant: Option<f64>,
    /// Keep the running average and the mean distance over every iterate.
    pub track_average: bool,
    /// Starting point; zero when `None`.
    pub initial: Option<&'a [f64]>,
}

impl<'a> RunSpec<'a> {
    pub fn new(
        algorithm: Algorithm,
        dataset: &'a Dataset,
        regularizer: &'a Regularizer,
        schedule: StepSchedule,
        total_iterations: usize,
        reference: &'a [f64],
    ) -> Self {
        Self {
            algorithm,
            dataset,
            regularizer,
            schedule,
            total_iterations,
            prox: ProxSolveConfig::default(),
            reference,
            log_every: 100,
            l_constant: None,
            track_average: true,
            initial: None,
        }
    }

    pub fn with_algorithm(&self, algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..self.clone()
        }
    }

    fn validate(&self, tau: usize) -> Result<()> {
        let len = self.dataset.parameter_len();
        self.regularizer.validate(len)?;
        self.prox.validate()?;
        if self.reference.len() != len {
            return Err(Error::LengthMismatch {
                what: "reference",
                expected: len,
                got: self.reference.len(),
            });
        }
        if let Some(x0) = self.initial {
            if x0.len() != len {
                return Err(Error::LengthMismatch {
                    what: "initial iterate",
                    expected: len,
                    got: x0.len(),
                });
            }
        }
        if self.total_iterations == 0 {
            return Err(Error::Config("total_iterations must be at least 1".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        self.schedule.check_admissible(tau, self.l_constant)
    }

    fn initial_iterate(&self) -> Vec<f64> {
        self.initial
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.dataset.parameter_len()])
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: IterateTrace,
    pub log: EventLog,
    pub timing: TimingBreakdown,
}

/// True when a job with snapshot `pending[candidate]` may be delivered at
/// update `t` without making any other pending job miss its deadline
/// `snapshot + tau` (earliest-deadline-first feasibility).
pub(crate) fn deliverable(pending: &[usize], candidate: usize, t: usize, tau: usize) -> bool {
    if t - pending[candidate] > tau {
        return false;
    }
    let mut rest: Vec<usize> = pending
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != candidate)
        .map(|(_, v)| *v)
        .collect();
    rest.sort_unstable();
    rest.iter()
        .enumerate()
        .all(|(k, &v)| v + tau > t + k)
}
