use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    deliverable, Algorithm, DelayModel, DeliveryKind, Event, EventLog, RunOutput, RunSpec,
    TimingBreakdown,
};
use crate::error::{Error, Result};
use crate::proximal::prox_calls_on_this_thread;
use crate::solvers::{dap_master_apply_split, dap_worker_prox_point, tap_master_step, TraceBuilder};

/// Deterministic single-threaded replay of the master recursion.
///
/// Each update `t` asks the delay model for `(d(t), sample)`, recomputes the
/// worker contribution from the retained iterate `x_{d(t)}` and applies the
/// TAP, DAP or P-SGD master step. Only the last `tau + 1` iterates are kept.
/// Records carry `wall_nanos = 0` so identical inputs give identical traces.
pub fn simulate(spec: &RunSpec<'_>, delay: &DelayModel) -> Result<RunOutput> {
    run(spec, delay, None)
}

/// Like [`simulate`], but update `t` uses `samples[t]` instead of drawing a
/// sample index. Used to replay the sample stream of a threaded run.
pub fn simulate_with_samples(
    spec: &RunSpec<'_>,
    delay: &DelayModel,
    samples: &[usize],
) -> Result<RunOutput> {
    if samples.len() < spec.total_iterations {
        return Err(Error::LengthMismatch {
            what: "sample stream",
            expected: spec.total_iterations,
            got: samples.len(),
        });
    }
    let n = spec.dataset.n();
    if let Some(bad) = samples.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!(
            "sample index {bad} out of range for {n} samples"
        )));
    }
    run(spec, delay, Some(samples))
}

fn run(spec: &RunSpec<'_>, delay: &DelayModel, samples: Option<&[usize]>) -> Result<RunOutput> {
    let tau = delay.tau();
    spec.validate(tau)?;
    let ds = spec.dataset;
    let reg = spec.regularizer;
    let len = ds.parameter_len();
    let kind = DeliveryKind::for_algorithm(spec.algorithm);

    let mut scheduler = Scheduler::new(delay, ds.n());
    let mut x = spec.initial_iterate();
    let mut history: VecDeque<(usize, Vec<f64>)> = VecDeque::with_capacity(tau + 2);
    history.push_back((0, x.clone()));

    let mut trace = TraceBuilder::new(&x, spec.reference, spec.log_every, spec.total_iterations, spec.track_average);
    let mut log = EventLog {
        tau,
        events: Vec::with_capacity(spec.total_iterations),
    };
    let mut timing = TimingBreakdown::default();
    let mut grad = vec![0.0; len];

    for t in 0..spec.total_iterations {
        let (mut source, drawn, worker) = scheduler.next(t);
        let sample = samples.map_or(drawn, |s| s[t]);
        if spec.algorithm == Algorithm::Psgd {
            source = t;
        }
        let snapshot = lookup(&history, source, t, tau)?;
        let eta_t = spec.schedule.step_size(t);

        let worker_calls = prox_calls_on_this_thread();
        ds.sample_gradient_into(snapshot, sample, &mut grad);
        let prox_point = match spec.algorithm {
            Algorithm::Dap => {
                let eta_d = spec.schedule.step_size(source);
                Some(dap_worker_prox_point(snapshot, eta_d, &grad, reg, &spec.prox)?)
            }
            _ => None,
        };
        timing.worker_prox_calls += prox_calls_on_this_thread() - worker_calls;
        timing.worker_jobs += 1;

        let master_calls = prox_calls_on_this_thread();
        match prox_point {
            Some(p) => dap_master_apply_split(&mut x, &p, snapshot)?,
            None => x = tap_master_step(&x, &grad, eta_t, reg, &spec.prox)?,
        }
        timing.master_prox_calls += prox_calls_on_this_thread() - master_calls;
        timing.master_updates += 1;

        trace.observe(t, eta_t, source, &x, 0);
        log.events.push(Event {
            t,
            source,
            worker,
            sample,
            kind,
        });
        scheduler.delivered(t, ds.n());

        history.push_back((t + 1, x.clone()));
        while history.len() > tau + 1 {
            history.pop_front();
        }
    }

    Ok(RunOutput {
        trace: trace.finish(x),
        log,
        timing,
    })
}

fn lookup(
    history: &VecDeque<(usize, Vec<f64>)>,
    source: usize,
    t: usize,
    tau: usize,
) -> Result<&[f64]> {
    if source > t || t - source > tau {
        return Err(Error::DelayBound {
            t,
            source_index: source,
            tau,
        });
    }
    let front = history.front().map(|h| h.0).unwrap_or(0);
    history
        .get(source - front)
        .filter(|h| h.0 == source)
        .map(|h| h.1.as_slice())
        .ok_or(Error::DelayBound {
            t,
            source_index: source,
            tau,
        })
}

/// Seeded source of `(d(t), sample, worker)` triples.
enum Scheduler {
    Uniform {
        tau: usize,
        delay_rng: ChaCha8Rng,
        sample_rng: ChaCha8Rng,
        n: usize,
    },
    Queue {
        tau: usize,
        pick_rng: ChaCha8Rng,
        worker_rngs: Vec<ChaCha8Rng>,
        /// `(snapshot, sample)` held by each worker.
        jobs: Vec<(usize, usize)>,
        last: usize,
        snapshots: Vec<usize>,
        allowed: Vec<usize>,
    },
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Scheduler {
    fn new(delay: &DelayModel, n: usize) -> Self {
        match *delay {
            DelayModel::UniformBounded { tau, seed } => Scheduler::Uniform {
                tau,
                delay_rng: stream(seed, 0),
                sample_rng: stream(seed, 1),
                n,
            },
            DelayModel::WorkerQueue { workers, seed } => {
                let mut worker_rngs: Vec<ChaCha8Rng> =
                    (0..workers).map(|w| stream(seed, 2 + w as u64)).collect();
                let jobs = worker_rngs
                    .iter_mut()
                    .map(|r| (0, r.random_range(0..n)))
                    .collect();
                Scheduler::Queue {
                    tau: workers,
                    pick_rng: stream(seed, 0),
                    worker_rngs,
                    jobs,
                    last: 0,
                    snapshots: Vec::with_capacity(workers),
                    allowed: Vec::with_capacity(workers),
                }
            }
        }
    }

    fn next(&mut self, t: usize) -> (usize, usize, usize) {
        match self {
            Scheduler::Uniform {
                tau,
                delay_rng,
                sample_rng,
                n,
            } => {
                let lo = t.saturating_sub(*tau);
                let d = delay_rng.random_range(lo..=t);
                (d, sample_rng.random_range(0..*n), 0)
            }
            Scheduler::Queue {
                tau,
                pick_rng,
                jobs,
                last,
                snapshots,
                allowed,
                ..
            } => {
                snapshots.clear();
                snapshots.extend(jobs.iter().map(|j| j.0));
                allowed.clear();
                allowed.extend((0..jobs.len()).filter(|&w| deliverable(snapshots, w, t, *tau)));
                // the schedule stays feasible by construction, so `allowed`
                // is never empty
                let w = allowed[pick_rng.random_range(0..allowed.len())];
                *last = w;
                (jobs[w].0, jobs[w].1, w)
            }
        }
    }

    /// The worker whose job was applied at `t` picks up `x_{t+1}`.
    fn delivered(&mut self, t: usize, n: usize) {
        if let Scheduler::Queue {
            worker_rngs,
            jobs,
            last,
            ..
        } = self
        {
            let w = *last;
            jobs[w] = (t + 1, worker_rngs[w].random_range(0..n));
        }
    }
}
