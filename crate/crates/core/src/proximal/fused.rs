use super::ProxSolveConfig;
use crate::error::{Error, Result};

/// Fixed dual step, `1 / lambda_max(R R^T)`; the first-difference operator
/// has `||R R^T|| <= 4`.
const DUAL_STEP: f64 = 0.25;

/// Prox of `lambda sum_i |y_i - y_{i+1}|` with `threshold = eta * lambda`.
///
/// Solves the box-constrained dual
/// `min_{||z||_inf <= threshold} 0.5 ||R^T z||^2 - <R^T z, x>` by projected
/// gradient descent and returns `x - R^T z`. `R` is the `(m-1) x m`
/// first-difference matrix.
pub fn fused_lasso_prox(x: &[f64], threshold: f64, cfg: &ProxSolveConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let m = x.len();
    if m < 2 {
        return Ok(x.to_vec());
    }
    let mut z = vec![0.0; m - 1];
    let mut rtz = vec![0.0; m];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.dual_max_iterations {
        apply_rt(&z, &mut rtz);
        // gradient R (R^T z - x), projected step, and projected-gradient norm
        let mut pg_sq = 0.0;
        for i in 0..m - 1 {
            let g = (rtz[i] - x[i]) - (rtz[i + 1] - x[i + 1]);
            let next = (z[i] - DUAL_STEP * g).clamp(-threshold, threshold);
            let d = (z[i] - next) / DUAL_STEP;
            pg_sq += d * d;
            z[i] = next;
        }
        residual = pg_sq.sqrt();
        if residual <= cfg.dual_tolerance {
            apply_rt(&z, &mut rtz);
            return Ok(x.iter().zip(&rtz).map(|(a, b)| a - b).collect());
        }
    }
    Err(Error::DualNotConverged {
        iterations: cfg.dual_max_iterations,
        residual,
    })
}

/// `out = R^T z`.
fn apply_rt(z: &[f64], out: &mut [f64]) {
    let m = out.len();
    out[0] = z[0];
    for i in 1..m - 1 {
        out[i] = z[i] - z[i - 1];
    }
    out[m - 1] = -z[m - 2];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let y = fused_lasso_prox(&[1.0, 0.0], 0.25, &ProxSolveConfig::default()).unwrap();
        assert!((y[0] - 0.75).abs() < 1e-12 && (y[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn large_threshold_fuses_to_mean() {
        let x = [1.0, 4.0, -2.0, 3.0];
        let y = fused_lasso_prox(&x, 100.0, &ProxSolveConfig::default()).unwrap();
        for v in y {
            assert!((v - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = ProxSolveConfig {
            dual_tolerance: 1e-14,
            dual_max_iterations: 2,
        };
        let err = fused_lasso_prox(&[5.0, -3.0, 2.0, 7.0, 0.0], 10.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::DualNotConverged { iterations: 2, .. }));
    }

    #[test]
    fn single_coordinate_is_identity() {
        assert_eq!(
            fused_lasso_prox(&[2.5], 1.0, &ProxSolveConfig::default()).unwrap(),
            vec![2.5]
        );
    }
}
