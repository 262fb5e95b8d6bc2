//! Independent minimizer of the proximal objective, used to test
//! [`Regularizer::prox`]. It never calls the closed forms or the dual solver.
//!
//! Two stages:
//! 1. averaged subgradient descent on the (1/eta)-strongly convex objective
//!    from a randomly perturbed start;
//! 2. an exact refinement per variant: coordinate bisection for L1, block
//!    coordinate descent plus the zero candidate for group lasso, active-set
//!    enumeration for fused lasso, and the Gram-matrix eigen route for the
//!    nuclear norm.
//!
//! The refined point must not be worse than the stage-1 average.

use rand::Rng;

use super::Regularizer;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};

const MAX_VECTOR_LEN: usize = 12;
const MAX_MATRIX_SIDE: usize = 4;
const CROSS_CHECK_SLACK: f64 = 1e-7;

/// `||y - x||^2 / (2 eta) + h(y)`.
pub fn prox_objective(reg: &Regularizer, x: &[f64], eta: f64, y: &[f64]) -> Result<f64> {
    let q: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(q / (2.0 * eta) + reg.value(y)?)
}

/// Approximate `Prox_{eta,h}(x)` without using the production operator.
///
/// `budget` bounds both the subgradient iterations and the refinement
/// sweeps; running out in the refinement is an error.
pub fn prox_oracle<R: Rng + ?Sized>(
    reg: &Regularizer,
    x: &[f64],
    eta: f64,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    reg.validate(x.len())?;
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    match reg {
        Regularizer::NuclearNorm { rows, cols, .. } => {
            if *rows > MAX_MATRIX_SIDE || *cols > MAX_MATRIX_SIDE {
                return Err(Error::Oracle(format!(
                    "matrix {rows}x{cols} exceeds the oracle limit {MAX_MATRIX_SIDE}x{MAX_MATRIX_SIDE}"
                )));
            }
        }
        _ if x.len() > MAX_VECTOR_LEN => {
            return Err(Error::Oracle(format!(
                "vector length {} exceeds the oracle limit {MAX_VECTOR_LEN}",
                x.len()
            )));
        }
        _ => {}
    }
    if budget == 0 {
        return Err(Error::Oracle("budget must be positive".into()));
    }

    let coarse = averaged_subgradient(reg, x, eta, budget, rng)?;
    let refined = match reg {
        Regularizer::L1 { lambda } => refine_l1(x, eta * lambda),
        Regularizer::GroupLasso { lambda, boundaries } => {
            refine_groups(x, &coarse, eta * lambda, boundaries, budget)?
        }
        Regularizer::FusedLasso { lambda } => refine_fused(reg, x, eta, eta * lambda)?,
        Regularizer::NuclearNorm { lambda, rows, cols } => {
            refine_nuclear(x, eta * lambda, *rows, *cols)?
        }
    };

    let f_coarse = prox_objective(reg, x, eta, &coarse)?;
    let f_refined = prox_objective(reg, x, eta, &refined)?;
    if f_refined > f_coarse + CROSS_CHECK_SLACK {
        return Err(Error::Oracle(format!(
            "refinement ({f_refined:e}) is worse than the subgradient average ({f_coarse:e}); \
             stationarity tolerance {CROSS_CHECK_SLACK:e} not reached"
        )));
    }
    Ok(refined)
}

fn averaged_subgradient<R: Rng + ?Sized>(
    reg: &Regularizer,
    x: &[f64],
    eta: f64,
    iterations: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut y: Vec<f64> = x.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
    let mut avg = vec![0.0; x.len()];
    let mut weight = 0.0;
    for k in 0..iterations {
        let s = reg.subgradient(&y)?;
        // step 2 / (mu (k + 2)) with mu = 1 / eta, weights k + 1
        let step = 2.0 * eta / (k as f64 + 2.0);
        for j in 0..y.len() {
            let g = (y[j] - x[j]) / eta + s[j];
            y[j] -= step * g;
        }
        let w = k as f64 + 1.0;
        weight += w;
        for (a, v) in avg.iter_mut().zip(&y) {
            *a += w / weight * (v - *a);
        }
    }
    Ok(avg)
}

/// Smallest `t` in `[lo, hi]` with `right_derivative(t) >= 0`.
fn bisect(lo: f64, hi: f64, right_derivative: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if right_derivative(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn refine_l1(x: &[f64], threshold: f64) -> Vec<f64> {
    x.iter()
        .map(|&xj| {
            let span = threshold.abs() + xj.abs() + 1.0;
            let t = bisect(-span, span, |t| {
                (t - xj) + threshold * if t >= 0.0 { 1.0 } else { -1.0 }
            });
            // the bisection approaches a kink at zero from above
            if t.abs() < 1e-300 {
                0.0
            } else {
                t
            }
        })
        .collect()
}

fn refine_groups(
    x: &[f64],
    coarse: &[f64],
    threshold: f64,
    boundaries: &[usize],
    budget: usize,
) -> Result<Vec<f64>> {
    let mut y = vec![0.0; x.len()];
    for w in boundaries.windows(2) {
        let xb = &x[w[0]..w[1]];
        if xb.iter().all(|v| *v == 0.0) {
            continue;
        }
        let start = &coarse[w[0]..w[1]];
        let mut yb: Vec<f64> = if start.iter().any(|v| *v != 0.0) {
            start.to_vec()
        } else {
            xb.to_vec()
        };
        let block_obj = |v: &[f64]| -> f64 {
            let q: f64 = v.iter().zip(xb).map(|(a, b)| (a - b) * (a - b)).sum();
            q / 2.0 + threshold * v.iter().map(|a| a * a).sum::<f64>().sqrt()
        };
        let mut converged = false;
        for _ in 0..budget.max(1000) * 10 {
            let mut change = 0.0_f64;
            for j in 0..yb.len() {
                let r_sq: f64 = yb
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, v)| v * v)
                    .sum();
                let xj = xb[j];
                let span = xj.abs() + threshold + 1.0;
                let t = bisect(-span, span, |t| {
                    let norm = (t * t + r_sq).sqrt();
                    let dn = if norm > 0.0 {
                        t / norm
                    } else if t >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    };
                    (t - xj) + threshold * dn
                });
                change = change.max((t - yb[j]).abs());
                yb[j] = t;
            }
            let scale = 1.0 + yb.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if change <= 1e-15 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Oracle(
                "group coordinate refinement exhausted its budget".into(),
            ));
        }
        let zero = vec![0.0; yb.len()];
        if block_obj(&zero) <= block_obj(&yb) {
            yb = zero;
        }
        y[w[0]..w[1]].copy_from_slice(&yb);
    }
    Ok(y)
}

/// Exhaustive search over fusion patterns. For each assignment of
/// {fused, up, down} to adjacent pairs, the stationary point with those signs
/// is closed-form per segment; the true minimizer is one of these candidates.
fn refine_fused(reg: &Regularizer, x: &[f64], eta: f64, threshold: f64) -> Result<Vec<f64>> {
    let m = x.len();
    if m < 2 {
        return Ok(x.to_vec());
    }
    let pairs = m - 1;
    let total = 3usize.pow(pairs as u32);
    let mut best = x.to_vec();
    let mut best_val = prox_objective(reg, x, eta, x)?;
    let mut states = vec![0u8; pairs];
    let mut cand = vec![0.0; m];
    for code in 0..total {
        let mut c = code;
        for s in states.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        // segments split at non-fused pairs; sign of the jump to the right
        let mut start = 0;
        let mut left_sign = 0.0;
        for end in 0..m {
            let closes = end == m - 1 || states[end] != 0;
            if !closes {
                continue;
            }
            let right_sign = if end == m - 1 {
                0.0
            } else if states[end] == 1 {
                1.0
            } else {
                -1.0
            };
            let len = (end - start + 1) as f64;
            let mean = x[start..=end].iter().sum::<f64>() / len;
            let value = mean - threshold * (left_sign - right_sign) / len;
            cand[start..=end].iter_mut().for_each(|v| *v = value);
            left_sign = right_sign;
            start = end + 1;
        }
        let val = prox_objective(reg, x, eta, &cand)?;
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&cand);
        }
    }
    Ok(best)
}

/// `Y = X g(X^T X)` with `g(s) = max(1 - threshold / sqrt(s), 0)`, evaluated
/// through a symmetric eigendecomposition of the Gram matrix.
fn refine_nuclear(x: &[f64], threshold: f64, rows: usize, cols: usize) -> Result<Vec<f64>> {
    let xm = DenseMatrix::from_row_major(rows, cols, x.to_vec())?;
    let gram = xm.transpose().matmul(&xm)?;
    let eig = symmetric_eigen(&gram)?;
    let mut g = DenseMatrix::zeros(cols, cols);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let sigma = lam.max(0.0).sqrt();
        let w = if sigma > threshold { 1.0 - threshold / sigma } else { 0.0 };
        if w == 0.0 {
            continue;
        }
        for a in 0..cols {
            for b in 0..cols {
                let v = g.get(a, b) + w * eig.eigenvectors.get(a, k) * eig.eigenvectors.get(b, k);
                g.set(a, b, v);
            }
        }
    }
    Ok(xm.matmul(&g)?.into_vec())
}
