use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, DenseMatrix};
use crate::error::{Error, Result};

const EIGEN_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: DenseMatrix,
}

/// Cyclic two-sided Jacobi eigensolver for symmetric matrices.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::Shape(format!(
            "symmetric eigen needs a square nonempty matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if let Some(index) = a.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "eigen input",
            index,
        });
    }
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut converged = false;
    let mut residual = 0.0;
    for _ in 0..EIGEN_MAX_SWEEPS {
        residual = off_diagonal_norm(&m) / scale;
        if residual <= 1e-15 {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNotConverged {
            sweeps: EIGEN_MAX_SWEEPS,
            residual,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let eigenvalues = order.iter().map(|&i| m.get(i, i)).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors.set(r, k, v.get(r, src));
        }
    }
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m.get(i, j) * m.get(i, j);
            }
        }
    }
    s.sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterationResult {
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration for the dominant eigenvalue of a symmetric positive
/// semidefinite operator given as a matrix-vector product.
///
/// Stops once `||A v - rho v|| <= tol * scale`, where `scale` defaults to
/// `|rho|`. The start vector comes from a fixed seed so results are
/// reproducible.
pub fn power_iteration<F>(
    dim: usize,
    apply: F,
    tol: f64,
    max_iterations: usize,
    scale: Option<f64>,
) -> PowerIterationResult
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..1.5)).collect();
    normalize(&mut v);
    let mut av = vec![0.0; dim];
    let mut rho = 0.0;
    for it in 1..=max_iterations {
        apply(&v, &mut av);
        rho = dot(&v, &av);
        let res = av
            .iter()
            .zip(&v)
            .map(|(a, x)| (a - rho * x) * (a - rho * x))
            .sum::<f64>()
            .sqrt();
        let s = scale.unwrap_or(rho.abs());
        if res <= tol * s || s == 0.0 {
            return PowerIterationResult {
                eigenvalue: rho,
                iterations: it,
                converged: true,
            };
        }
        let n = dot(&av, &av).sqrt();
        if n == 0.0 {
            return PowerIterationResult {
                eigenvalue: 0.0,
                iterations: it,
                converged: true,
            };
        }
        for (x, a) in v.iter_mut().zip(&av) {
            *x = a / n;
        }
    }
    PowerIterationResult {
        eigenvalue: rho,
        iterations: max_iterations,
        converged: false,
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}
