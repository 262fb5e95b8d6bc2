use serde::{Deserialize, Serialize};

use super::power_iteration;
use crate::objective::Dataset;

const POWER_TOLERANCE: f64 = 1e-8;
const POWER_MAX_ITERATIONS: usize = 10_000;
/// Smallest curvature, relative to the largest, still treated as positive.
const FLAT_RATIO: f64 = 1e-10;

/// Curvature constants of a ridge least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    /// Largest Hessian eigenvalue (gradient Lipschitz constant).
    pub l_constant: f64,
    /// Smallest Hessian eigenvalue (strong convexity modulus).
    pub mu_constant: f64,
    /// Set when the objective is not strongly convex; `mu_constant` is then 0.
    pub strong_convexity_warning: bool,
    /// Both power iterations met their tolerance before the iteration cap.
    pub converged: bool,
}

/// Extreme eigenvalues of `H = 2((1/n) S^T S + ridge * I)`.
///
/// The multi-target Hessian is `H` repeated once per target, so its spectrum
/// is the same. The largest eigenvalue comes from power iteration on `H`; the
/// smallest from power iteration on `l * I - H`.
pub fn spectral_bounds(ds: &Dataset) -> SpectralBounds {
    let dim = ds.sample_dim();
    let hess = |x: &[f64], y: &mut [f64]| ds.hessian_apply(x, y);
    let top = power_iteration(dim, hess, POWER_TOLERANCE, POWER_MAX_ITERATIONS, None);
    let l = top.eigenvalue;
    if dim == 1 {
        return finish(l, l, top.converged);
    }
    let shifted = |x: &[f64], y: &mut [f64]| {
        ds.hessian_apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = l * xi - *yi;
        }
    };
    let spread = power_iteration(
        dim,
        shifted,
        POWER_TOLERANCE,
        POWER_MAX_ITERATIONS,
        Some(l.abs()),
    );
    // the ridge term alone bounds the spectrum from below
    let mu = (l - spread.eigenvalue).min(l).max(2.0 * ds.ridge_lambda());
    finish(l, mu, top.converged && spread.converged)
}

fn finish(l: f64, mu: f64, converged: bool) -> SpectralBounds {
    if mu <= FLAT_RATIO * l {
        SpectralBounds {
            l_constant: l,
            mu_constant: 0.0,
            strong_convexity_warning: true,
            converged,
        }
    } else {
        SpectralBounds {
            l_constant: l,
            mu_constant: mu,
            strong_convexity_warning: false,
            converged,
        }
    }
}
