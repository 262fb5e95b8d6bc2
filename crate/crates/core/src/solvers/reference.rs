use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, spectral_bounds};
use crate::objective::{objective_value, Dataset};
use crate::proximal::{ProxSolveConfig, Regularizer};

pub const REFERENCE_MAX_ITERATIONS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||x - Prox_{eta,h}(x - eta grad f(x))|| / eta` at the returned point.
    pub gradient_mapping_norm: f64,
    pub objective: f64,
    pub step: f64,
}

/// Gradient-mapping norm of `x` for the proximal gradient step `eta`.
pub fn gradient_mapping_norm(
    ds: &Dataset,
    reg: &Regularizer,
    x: &[f64],
    eta: f64,
    cfg: &ProxSolveConfig,
) -> Result<f64> {
    let next = prox_gradient_step(ds, reg, x, eta, cfg)?;
    let diff: Vec<f64> = x.iter().zip(&next).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / eta)
}

fn prox_gradient_step(
    ds: &Dataset,
    reg: &Regularizer,
    x: &[f64],
    eta: f64,
    cfg: &ProxSolveConfig,
) -> Result<Vec<f64>> {
    let g = ds.full_gradient(x)?;
    let z: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
    reg.prox(&z, eta, cfg)
}

/// High-accuracy minimizer of `f + h` by proximal gradient descent with step
/// `1 / L`, started at zero, stopped once the gradient-mapping norm is at
/// most `tol`.
pub fn solve_reference(
    ds: &Dataset,
    reg: &Regularizer,
    tol: f64,
    cfg: &ProxSolveConfig,
) -> Result<ReferenceSolution> {
    solve_reference_capped(ds, reg, tol, cfg, REFERENCE_MAX_ITERATIONS)
}

pub fn solve_reference_capped(
    ds: &Dataset,
    reg: &Regularizer,
    tol: f64,
    cfg: &ProxSolveConfig,
    max_iterations: usize,
) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    reg.validate(ds.parameter_len())?;
    let bounds = spectral_bounds(ds);
    if bounds.strong_convexity_warning {
        return Err(Error::Config(
            "objective is not strongly convex (mu = 0); add a positive ridge weight to obtain a unique reference solution"
                .into(),
        ));
    }
    solve_reference_with_step(ds, reg, tol, cfg, 1.0 / bounds.l_constant, max_iterations)
}

/// [`solve_reference_capped`] with a caller-supplied step `eta <= 1 / L`,
/// for callers that already know the curvature constants.
pub fn solve_reference_with_step(
    ds: &Dataset,
    reg: &Regularizer,
    tol: f64,
    cfg: &ProxSolveConfig,
    eta: f64,
    max_iterations: usize,
) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {eta}")));
    }
    reg.validate(ds.parameter_len())?;
    let mut x = vec![0.0; ds.parameter_len()];
    let mut residual = f64::INFINITY;
    for it in 0..max_iterations {
        let next = prox_gradient_step(ds, reg, &x, eta, cfg)?;
        residual = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / eta;
        x = next;
        if residual <= tol {
            let gm = gradient_mapping_norm(ds, reg, &x, eta, cfg)?;
            return Ok(ReferenceSolution {
                objective: objective_value(ds, reg, &x)?,
                x,
                iterations: it + 1,
                gradient_mapping_norm: gm,
                step: eta,
            });
        }
    }
    Err(Error::ReferenceNotConverged {
        iterations: max_iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{generate_synthetic, SyntheticConfig};

    #[test]
    fn large_l1_weight_gives_zero() {
        let ds = generate_synthetic(&SyntheticConfig {
            n: 20,
            m: 4,
            targets: 1,
            ridge_lambda: 0.1,
            noise_std: 0.1,
            ground_truth_sparsity: 0.0,
            seed: 5,
        })
        .unwrap()
        .dataset;
        let g0 = ds.full_gradient(&[0.0; 4]).unwrap();
        let lam = g0.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let sol = solve_reference(&ds, &Regularizer::l1(lam).unwrap(), 1e-10, &ProxSolveConfig::default())
            .unwrap();
        assert!(sol.x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn refuses_flat_objective() {
        let ds = Dataset::new(vec![vec![1.0, 1.0]], vec![vec![1.0]], 0.0).unwrap();
        let err = solve_reference(&ds, &Regularizer::l1(0.1).unwrap(), 1e-8, &ProxSolveConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn cap_is_reported() {
        let ds = Dataset::new(vec![vec![1.0, 0.5], vec![0.2, 1.0]], vec![vec![1.0], vec![-1.0]], 0.1)
            .unwrap();
        let err = solve_reference_capped(&ds, &Regularizer::l1(0.01).unwrap(), 1e-12, &ProxSolveConfig::default(), 2)
            .unwrap_err();
        assert!(matches!(err, Error::ReferenceNotConverged { iterations: 2, .. }));
    }
}
