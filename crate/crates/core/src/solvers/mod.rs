//! Single-step recursions of P-SGD, TAP-SGD and DAP-SGD, step-size
//! schedules, the running average and the full-gradient reference solver.

mod reference;
mod schedule;
mod trace;

pub use reference::{
    gradient_mapping_norm, solve_reference, solve_reference_capped, solve_reference_with_step,
    ReferenceSolution,
    REFERENCE_MAX_ITERATIONS,
};
pub use schedule::StepSchedule;
pub use trace::{IterateTrace, TraceBuilder, TraceRecord};

use crate::error::{Error, Result};
use crate::proximal::{ProxSolveConfig, Regularizer};

fn gradient_step(x: &[f64], grad: &[f64], eta: f64) -> Result<Vec<f64>> {
    if x.len() != grad.len() {
        return Err(Error::LengthMismatch {
            what: "gradient",
            expected: x.len(),
            got: grad.len(),
        });
    }
    Ok(x.iter().zip(grad).map(|(a, g)| a - eta * g).collect())
}

/// `Prox_{eta,h}(x - eta * grad)`.
pub fn psgd_step(
    x: &[f64],
    grad: &[f64],
    eta: f64,
    reg: &Regularizer,
    cfg: &ProxSolveConfig,
) -> Result<Vec<f64>> {
    reg.prox(&gradient_step(x, grad, eta)?, eta, cfg)
}

/// TAP-SGD master update: the proximal step taken on the current iterate
/// with a gradient that may have been evaluated at an older snapshot.
pub fn tap_master_step(
    x_t: &[f64],
    delayed_grad: &[f64],
    eta_t: f64,
    reg: &Regularizer,
    cfg: &ProxSolveConfig,
) -> Result<Vec<f64>> {
    reg.prox(&gradient_step(x_t, delayed_grad, eta_t)?, eta_t, cfg)
}

/// DAP-SGD worker output `Prox_{eta,h}(x - eta * grad) - x`.
pub fn dap_worker_innovation(
    x_snapshot: &[f64],
    eta: f64,
    sample_grad: &[f64],
    reg: &Regularizer,
    cfg: &ProxSolveConfig,
) -> Result<Vec<f64>> {
    let mut p = dap_worker_prox_point(x_snapshot, eta, sample_grad, reg, cfg)?;
    for (pi, xi) in p.iter_mut().zip(x_snapshot) {
        *pi -= xi;
    }
    Ok(p)
}

/// DAP-SGD worker prox point `Prox_{eta,h}(x - eta * grad)`; the innovation
/// is this minus the snapshot.
pub fn dap_worker_prox_point(
    x_snapshot: &[f64],
    eta: f64,
    sample_grad: &[f64],
    reg: &Regularizer,
    cfg: &ProxSolveConfig,
) -> Result<Vec<f64>> {
    reg.prox(&gradient_step(x_snapshot, sample_grad, eta)?, eta, cfg)
}

/// Adds the innovation `prox_point - snapshot` to `x` as
/// `prox_point + (x - snapshot)`.
///
/// Same update as [`dap_master_apply`] with the sum re-associated. When `x`
/// is still the snapshot the bracket is exactly zero and the result is the
/// prox point bit for bit, which `x + (p - x)` does not guarantee.
#[inline]
pub fn dap_master_apply_split(x: &mut [f64], prox_point: &[f64], snapshot: &[f64]) -> Result<()> {
    for (what, v) in [("prox point", prox_point), ("snapshot", snapshot)] {
        if v.len() != x.len() {
            return Err(Error::LengthMismatch {
                what,
                expected: x.len(),
                got: v.len(),
            });
        }
    }
    for ((a, p), s) in x.iter_mut().zip(prox_point).zip(snapshot) {
        *a = p + (*a - s);
    }
    Ok(())
}

/// DAP-SGD master update `x_t + innovation`. Element-wise addition only.
pub fn dap_master_step(x_t: &[f64], innovation: &[f64]) -> Result<Vec<f64>> {
    let mut x = x_t.to_vec();
    dap_master_apply(&mut x, innovation)?;
    Ok(x)
}

/// In-place form of [`dap_master_step`].
#[inline]
pub fn dap_master_apply(x: &mut [f64], innovation: &[f64]) -> Result<()> {
    if x.len() != innovation.len() {
        return Err(Error::LengthMismatch {
            what: "innovation",
            expected: x.len(),
            got: innovation.len(),
        });
    }
    for (a, d) in x.iter_mut().zip(innovation) {
        *a += d;
    }
    Ok(())
}

/// Arithmetic mean of `x_0, ..., x_T`.
pub fn running_average(iterates: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = iterates
        .first()
        .ok_or_else(|| Error::InvalidParameter("running average of an empty trace".into()))?;
    let mut sum = vec![0.0; first.len()];
    for x in iterates {
        if x.len() != sum.len() {
            return Err(Error::LengthMismatch {
                what: "iterate",
                expected: sum.len(),
                got: x.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(x) {
            *s += v;
        }
    }
    let k = iterates.len() as f64;
    Ok(sum.into_iter().map(|s| s / k).collect())
}
