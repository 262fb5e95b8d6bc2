use serde::{Deserialize, Serialize};

use crate::linalg::distance_sq;

/// One logged master update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Master update index, starting at 0.
    pub t: usize,
    pub eta: f64,
    /// Index of the iterate the applied contribution was computed from.
    pub delay_source: usize,
    /// `||x_{t+1} - x*||^2`, the distance after this update.
    pub distance_sq: f64,
    /// Elapsed time since the run started; 0 in simulation.
    pub wall_nanos: u64,
}

/// Per-run history of the distance to the reference solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub records: Vec<TraceRecord>,
    /// `||x_0 - x*||^2`.
    pub initial_distance_sq: f64,
    pub total_iterations: usize,
    pub final_iterate: Vec<f64>,
    /// Mean of `x_0, ..., x_T`; empty when averaging was not tracked.
    pub running_average: Vec<f64>,
    /// `(1 / (T + 1)) sum_{t=0}^{T} ||x_t - x*||^2`.
    pub mean_distance_sq: f64,
}

impl IterateTrace {
    /// Distance of the final iterate, `||x_T - x*||^2`.
    pub fn final_distance_sq(&self) -> f64 {
        self.records
            .last()
            .map(|r| r.distance_sq)
            .unwrap_or(self.initial_distance_sq)
    }

    pub fn max_delay(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.t - r.delay_source)
            .max()
            .unwrap_or(0)
    }
}

/// Accumulates an [`IterateTrace`] one update at a time.
#[derive(Debug)]
pub struct TraceBuilder<'a> {
    reference: &'a [f64],
    log_every: usize,
    total_iterations: usize,
    track_average: bool,
    records: Vec<TraceRecord>,
    initial_distance_sq: f64,
    average: Vec<f64>,
    distance_sum: f64,
    seen: usize,
}

impl<'a> TraceBuilder<'a> {
    pub fn new(
        x0: &[f64],
        reference: &'a [f64],
        log_every: usize,
        total_iterations: usize,
        track_average: bool,
    ) -> Self {
        let d0 = distance_sq(x0, reference);
        Self {
            reference,
            log_every: log_every.max(1),
            total_iterations,
            track_average,
            records: Vec::with_capacity(total_iterations / log_every.max(1) + 2),
            initial_distance_sq: d0,
            average: if track_average { x0.to_vec() } else { Vec::new() },
            distance_sum: d0,
            seen: 1,
        }
    }

    /// Whether update `t` will be written to the trace.
    #[inline]
    pub fn logs(&self, t: usize) -> bool {
        t % self.log_every == 0 || t + 1 == self.total_iterations
    }

    /// Whether every iterate must be passed to [`TraceBuilder::observe`].
    #[inline]
    pub fn needs_every_iterate(&self) -> bool {
        self.track_average
    }

    /// Registers `x_{t+1}`, the iterate produced by update `t`.
    pub fn observe(&mut self, t: usize, eta: f64, delay_source: usize, x_next: &[f64], wall_nanos: u64) {
        let needs_distance = self.track_average || self.logs(t);
        if !needs_distance {
            return;
        }
        let d = distance_sq(x_next, self.reference);
        if self.track_average {
            self.seen += 1;
            let k = self.seen as f64;
            for (a, v) in self.average.iter_mut().zip(x_next) {
                *a += (v - *a) / k;
            }
            self.distance_sum += d;
        }
        if self.logs(t) {
            self.records.push(TraceRecord {
                t,
                eta,
                delay_source,
                distance_sq: d,
                wall_nanos,
            });
        }
    }

    pub fn finish(self, final_iterate: Vec<f64>) -> IterateTrace {
        let mean_distance_sq = if self.track_average {
            self.distance_sum / self.seen as f64
        } else {
            f64::NAN
        };
        IterateTrace {
            records: self.records,
            initial_distance_sq: self.initial_distance_sq,
            total_iterations: self.total_iterations,
            final_iterate,
            running_average: self.average,
            mean_distance_sq,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logs_first_every_kth_and_last() {
        let r = [0.0];
        let mut b = TraceBuilder::new(&[4.0], &r, 3, 7, true);
        for t in 0..7 {
            b.observe(t, 0.1, t, &[(6 - t) as f64], 0);
        }
        let tr = b.finish(vec![0.0]);
        let ts: Vec<usize> = tr.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 3, 6]);
        assert_eq!(tr.initial_distance_sq, 16.0);
        assert_eq!(tr.final_distance_sq(), 0.0);
        // iterates 4,6,5,4,3,2,1,0 -> mean 25/8
        assert!((tr.running_average[0] - 25.0 / 8.0).abs() < 1e-15);
        let mean_d = (16.0 + 36.0 + 25.0 + 16.0 + 9.0 + 4.0 + 1.0) / 8.0;
        assert!((tr.mean_distance_sq - mean_d).abs() < 1e-12);
    }
}
