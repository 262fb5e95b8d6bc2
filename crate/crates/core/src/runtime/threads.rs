use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    deliverable, thread_cpu_nanos, Algorithm, DeliveryKind, Event, EventLog, RunOutput, RunSpec,
    TimingBreakdown,
};
use crate::error::{Error, Result};
use crate::proximal::prox_calls_on_this_thread;
use crate::solvers::{dap_master_apply_split, dap_worker_prox_point, tap_master_step, TraceBuilder};

struct Message {
    worker: usize,
    source: usize,
    sample: usize,
    /// Gradient for TAP, prox point for DAP.
    payload: Vec<f64>,
    /// DAP only: the snapshot the prox point was computed from.
    snapshot: Vec<f64>,
}

struct State {
    x: Vec<f64>,
    /// Index of the next master update, i.e. the version of `x`.
    version: usize,
    /// Snapshot version held by each worker, `None` between an ack and the
    /// next read.
    registry: Vec<Option<usize>>,
    inbox: Vec<Message>,
    /// Set while a worker's message waits for the master.
    pending: Vec<bool>,
    stop: bool,
    error: Option<Error>,
}

struct Shared {
    state: Mutex<State>,
    master_cv: Condvar,
    worker_cv: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        // a poisoned lock means a thread panicked; keep going so the panic
        // surfaces through join
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Default)]
struct WorkerTotals {
    jobs: u64,
    compute_nanos: u64,
    compute_cpu_nanos: u64,
    prox_calls: u64,
}

/// Runs TAP or DAP with `workers` threads sharing one parameter vector.
///
/// Each worker reads a snapshot, samples an index from its own seeded stream,
/// computes a gradient (TAP) or an innovation (DAP) and waits until the master
/// has consumed it before reading again. The master delivers messages in
/// arrival order among those that keep every outstanding job within the
/// delay bound `tau = workers`, so the measured delay never exceeds `tau`.
/// With one worker the run is sequential with zero delay.
pub fn run_threads(spec: &RunSpec<'_>, workers: usize, seed: u64) -> Result<RunOutput> {
    if spec.algorithm == Algorithm::Psgd {
        return Err(Error::Config(
            "psgd is synchronous; use the simulator for it".into(),
        ));
    }
    if workers == 0 {
        return Err(Error::Config("at least one worker thread is required".into()));
    }
    let tau = workers;
    spec.validate(tau)?;
    let x0 = spec.initial_iterate();
    let shared = Shared {
        state: Mutex::new(State {
            x: x0.clone(),
            version: 0,
            registry: vec![None; workers],
            inbox: Vec::with_capacity(workers),
            pending: vec![false; workers],
            stop: false,
            error: None,
        }),
        master_cv: Condvar::new(),
        worker_cv: Condvar::new(),
    };
    let kind = DeliveryKind::for_algorithm(spec.algorithm);

    let start = Instant::now();
    let (trace, log, mut timing, totals) = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let shared = &shared;
                scope.spawn(move || worker_loop(spec, shared, w, seed))
            })
            .collect();
        let master = master_loop(spec, &shared, tau, kind, &x0, start);
        {
            let mut st = shared.lock();
            st.stop = true;
        }
        shared.worker_cv.notify_all();
        let totals: Vec<WorkerTotals> = handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect();
        let (trace, log, timing) = master;
        (trace, log, timing, totals)
    });
    timing.wall_nanos = start.elapsed().as_nanos() as u64;
    for w in &totals {
        timing.worker_jobs += w.jobs;
        timing.worker_compute_nanos += w.compute_nanos;
        timing.worker_compute_cpu_nanos += w.compute_cpu_nanos;
        timing.worker_prox_calls += w.prox_calls;
    }
    if let Some(e) = shared.lock().error.take() {
        return Err(e);
    }
    let final_x = shared.lock().x.clone();
    Ok(RunOutput {
        trace: trace.finish(final_x),
        log,
        timing,
    })
}

fn master_loop<'a>(
    spec: &RunSpec<'a>,
    shared: &Shared,
    tau: usize,
    kind: DeliveryKind,
    x0: &[f64],
    start: Instant,
) -> (TraceBuilder<'a>, EventLog, TimingBreakdown) {
    let mut trace = TraceBuilder::new(
        x0,
        spec.reference,
        spec.log_every,
        spec.total_iterations,
        spec.track_average,
    );
    let mut log = EventLog {
        tau,
        events: Vec::with_capacity(spec.total_iterations),
    };
    let mut timing = TimingBreakdown::default();
    let mut held: Vec<usize> = Vec::with_capacity(tau);

    for t in 0..spec.total_iterations {
        let mut st = shared.lock();
        let pick = loop {
            if st.error.is_some() {
                return (trace, log, timing);
            }
            held.clear();
            held.extend(st.registry.iter().flatten().copied());
            let found = st.inbox.iter().position(|m| {
                let slot = st.registry[..m.worker].iter().flatten().count();
                deliverable(&held, slot, t, tau)
            });
            match found {
                Some(k) => break k,
                None => st = shared.master_cv.wait(st).unwrap_or_else(|e| e.into_inner()),
            }
        };
        let msg = st.inbox.remove(pick);
        if t - msg.source > tau {
            st.error = Some(Error::DelayBound {
                t,
                source_index: msg.source,
                tau,
            });
            return (trace, log, timing);
        }
        let eta_t = spec.schedule.step_size(t);

        let calls = prox_calls_on_this_thread();
        let cpu = thread_cpu_nanos();
        let wall = Instant::now();
        let applied = match spec.algorithm {
            Algorithm::Dap => dap_master_apply_split(&mut st.x, &msg.payload, &msg.snapshot),
            _ => tap_master_step(&st.x, &msg.payload, eta_t, spec.regularizer, &spec.prox)
                .map(|next| st.x = next),
        };
        timing.master_critical_nanos += wall.elapsed().as_nanos() as u64;
        timing.master_critical_cpu_nanos += thread_cpu_nanos().saturating_sub(cpu);
        timing.master_prox_calls += prox_calls_on_this_thread() - calls;
        if let Err(e) = applied {
            st.error = Some(e);
            return (trace, log, timing);
        }
        timing.master_updates += 1;
        st.version = t + 1;
        st.registry[msg.worker] = None;
        st.pending[msg.worker] = false;

        if trace.needs_every_iterate() || trace.logs(t) {
            trace.observe(t, eta_t, msg.source, &st.x, start.elapsed().as_nanos() as u64);
        }
        drop(st);
        shared.worker_cv.notify_all();
        log.events.push(Event {
            t,
            source: msg.source,
            worker: msg.worker,
            sample: msg.sample,
            kind,
        });
    }
    (trace, log, timing)
}

fn worker_loop(spec: &RunSpec<'_>, shared: &Shared, w: usize, seed: u64) -> WorkerTotals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(w as u64 + 1);
    let n = spec.dataset.n();
    let len = spec.dataset.parameter_len();
    let mut totals = WorkerTotals::default();
    let mut snapshot = vec![0.0; len];

    loop {
        let source = {
            let mut st = shared.lock();
            while st.pending[w] && !st.stop {
                st = shared.worker_cv.wait(st).unwrap_or_else(|e| e.into_inner());
            }
            if st.stop {
                return totals;
            }
            snapshot.copy_from_slice(&st.x);
            let v = st.version;
            st.registry[w] = Some(v);
            v
        };
        let sample = rng.random_range(0..n);

        let calls = prox_calls_on_this_thread();
        let cpu = thread_cpu_nanos();
        let wall = Instant::now();
        let mut grad = vec![0.0; len];
        spec.dataset.sample_gradient_into(&snapshot, sample, &mut grad);
        let payload = match spec.algorithm {
            Algorithm::Dap => dap_worker_prox_point(
                &snapshot,
                spec.schedule.step_size(source),
                &grad,
                spec.regularizer,
                &spec.prox,
            ),
            _ => Ok(grad),
        };
        totals.compute_nanos += wall.elapsed().as_nanos() as u64;
        totals.compute_cpu_nanos += thread_cpu_nanos().saturating_sub(cpu);
        totals.prox_calls += prox_calls_on_this_thread() - calls;
        totals.jobs += 1;
        let sent = if spec.algorithm == Algorithm::Dap {
            snapshot.clone()
        } else {
            Vec::new()
        };

        let mut st = shared.lock();
        if st.stop {
            return totals;
        }
        match payload {
            Ok(payload) => {
                st.inbox.push(Message {
                    worker: w,
                    source,
                    sample,
                    payload,
                    snapshot: sent,
                });
                st.pending[w] = true;
            }
            Err(e) => {
                st.error = Some(e);
                st.stop = true;
            }
        }
        drop(st);
        shared.master_cv.notify_one();
    }
}
