//! Non-smooth regularizers `h`, their proximal maps
//! `Prox_{eta,h}(x) = argmin_y ||y - x||^2 / (2 eta) + h(y)`,
//! subgradients and the constant subgradient bounds used by the
//! convergence analysis.

mod fused;
mod oracle;

pub use fused::fused_lasso_prox;
pub use oracle::{prox_objective, prox_oracle};

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, DenseMatrix};

thread_local! {
    static PROX_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of proximal evaluations performed so far on the calling thread.
pub fn prox_calls_on_this_thread() -> u64 {
    PROX_CALLS.with(|c| c.get())
}

/// Controls the iterative fused-lasso subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxSolveConfig {
    pub dual_tolerance: f64,
    pub dual_max_iterations: usize,
}

impl Default for ProxSolveConfig {
    fn default() -> Self {
        Self {
            dual_tolerance: 1e-10,
            dual_max_iterations: 100_000,
        }
    }
}

impl ProxSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dual_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dual_tolerance must be positive, got {}",
                self.dual_tolerance
            )));
        }
        if self.dual_max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "dual_max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The supported regularizers. Every variant scales by `lambda > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    /// `lambda * ||x||_1`.
    L1 { lambda: f64 },
    /// `lambda * sum_g ||x_g||_2` over contiguous groups.
    ///
    /// `boundaries` are 0-based offsets `0 = b_0 < b_1 < ... < b_g = m`;
    /// group `k` covers `b_k..b_{k+1}`.
    GroupLasso { lambda: f64, boundaries: Vec<usize> },
    /// `lambda * sum_i |x_i - x_{i+1}|`.
    FusedLasso { lambda: f64 },
    /// `lambda * ||X||_*` for the row-major `rows x cols` matrix `X`.
    NuclearNorm { lambda: f64, rows: usize, cols: usize },
}

impl Regularizer {
    pub fn l1(lambda: f64) -> Result<Self> {
        let r = Regularizer::L1 { lambda };
        r.check_lambda()?;
        Ok(r)
    }

    pub fn group_lasso(lambda: f64, boundaries: Vec<usize>) -> Result<Self> {
        let r = Regularizer::GroupLasso { lambda, boundaries };
        r.check_lambda()?;
        r.check_boundaries()?;
        Ok(r)
    }

    /// Groups of `size` consecutive coordinates; the last may be shorter.
    pub fn group_lasso_uniform(lambda: f64, len: usize, size: usize) -> Result<Self> {
        if size == 0 || len == 0 {
            return Err(Error::InvalidParameter(
                "group size and parameter length must be positive".into(),
            ));
        }
        let mut b: Vec<usize> = (0..len).step_by(size).collect();
        b.push(len);
        Self::group_lasso(lambda, b)
    }

    pub fn fused_lasso(lambda: f64) -> Result<Self> {
        let r = Regularizer::FusedLasso { lambda };
        r.check_lambda()?;
        Ok(r)
    }

    pub fn nuclear_norm(lambda: f64, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "nuclear norm needs a nonempty matrix shape, got {rows}x{cols}"
            )));
        }
        let r = Regularizer::NuclearNorm { lambda, rows, cols };
        r.check_lambda()?;
        Ok(r)
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Regularizer::L1 { lambda }
            | Regularizer::GroupLasso { lambda, .. }
            | Regularizer::FusedLasso { lambda }
            | Regularizer::NuclearNorm { lambda, .. } => lambda,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::L1 { .. } => "l1",
            Regularizer::GroupLasso { .. } => "group_lasso",
            Regularizer::FusedLasso { .. } => "fused_lasso",
            Regularizer::NuclearNorm { .. } => "nuclear_norm",
        }
    }

    /// Same structure with a different weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut r = self.clone();
        match &mut r {
            Regularizer::L1 { lambda: l }
            | Regularizer::GroupLasso { lambda: l, .. }
            | Regularizer::FusedLasso { lambda: l }
            | Regularizer::NuclearNorm { lambda: l, .. } => *l = lambda,
        }
        r.check_lambda()?;
        Ok(r)
    }

    fn check_lambda(&self) -> Result<()> {
        let l = self.lambda();
        if l > 0.0 && l.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "regularizer lambda must be positive and finite, got {l}"
            )))
        }
    }

    fn check_boundaries(&self) -> Result<()> {
        if let Regularizer::GroupLasso { boundaries, .. } = self {
            if boundaries.len() < 2 || boundaries[0] != 0 {
                return Err(Error::InvalidParameter(format!(
                    "group boundaries must start at 0 and name at least one group, got {boundaries:?}"
                )));
            }
            if boundaries.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "group boundaries must be strictly increasing, got {boundaries:?}"
                )));
            }
        }
        Ok(())
    }

    /// Checks that a parameter of length `len` fits this regularizer.
    pub fn validate(&self, len: usize) -> Result<()> {
        self.check_lambda()?;
        self.check_boundaries()?;
        let expected = match self {
            Regularizer::L1 { .. } | Regularizer::FusedLasso { .. } => return Ok(()),
            Regularizer::GroupLasso { boundaries, .. } => *boundaries.last().unwrap(),
            Regularizer::NuclearNorm { rows, cols, .. } => rows * cols,
        };
        if expected != len {
            return Err(Error::LengthMismatch {
                what: "regularizer parameter",
                expected,
                got: len,
            });
        }
        Ok(())
    }

    /// Number of groups for group lasso, `None` otherwise.
    pub fn group_count(&self) -> Option<usize> {
        match self {
            Regularizer::GroupLasso { boundaries, .. } => Some(boundaries.len() - 1),
            _ => None,
        }
    }

    /// `h(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.validate(x.len())?;
        Ok(match self {
            Regularizer::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::GroupLasso { lambda, boundaries } => {
                lambda
                    * boundaries
                        .windows(2)
                        .map(|w| crate::linalg::norm2(&x[w[0]..w[1]]))
                        .sum::<f64>()
            }
            Regularizer::FusedLasso { lambda } => {
                lambda * x.windows(2).map(|w| (w[0] - w[1]).abs()).sum::<f64>()
            }
            Regularizer::NuclearNorm { lambda, rows, cols } => {
                let m = DenseMatrix::from_row_major(*rows, *cols, x.to_vec())?;
                lambda * svd(&m)?.singular_values.iter().sum::<f64>()
            }
        })
    }

    /// `Prox_{eta,h}(x)`.
    pub fn prox(&self, x: &[f64], eta: f64, cfg: &ProxSolveConfig) -> Result<Vec<f64>> {
        self.validate(x.len())?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive and finite, got {eta}"
            )));
        }
        PROX_CALLS.with(|c| c.set(c.get() + 1));
        let threshold = eta * self.lambda();
        match self {
            Regularizer::L1 { .. } => Ok(x.iter().map(|&v| soft_threshold(v, threshold)).collect()),
            Regularizer::GroupLasso { boundaries, .. } => {
                let mut y = x.to_vec();
                for w in boundaries.windows(2) {
                    let block = &mut y[w[0]..w[1]];
                    let norm = crate::linalg::norm2(block);
                    let scale = if norm > threshold {
                        1.0 - threshold / norm
                    } else {
                        0.0
                    };
                    block.iter_mut().for_each(|v| *v *= scale);
                }
                Ok(y)
            }
            Regularizer::FusedLasso { .. } => fused_lasso_prox(x, threshold, cfg),
            Regularizer::NuclearNorm { rows, cols, .. } => {
                let m = DenseMatrix::from_row_major(*rows, *cols, x.to_vec())?;
                let dec = svd(&m)?;
                let shrunk: Vec<f64> = dec
                    .singular_values
                    .iter()
                    .map(|s| (s - threshold).max(0.0))
                    .collect();
                Ok(dec.reconstruct_with(&shrunk).into_vec())
            }
        }
    }

    /// One element of the subdifferential `dh(x)`.
    ///
    /// Uses `sign(0) = 0`, zero for zero groups and the rank-revealing part
    /// `lambda * U_r V_r^T` for the nuclear norm.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate(x.len())?;
        let lambda = self.lambda();
        Ok(match self {
            Regularizer::L1 { .. } => x.iter().map(|&v| lambda * sign(v)).collect(),
            Regularizer::GroupLasso { boundaries, .. } => {
                let mut g = vec![0.0; x.len()];
                for w in boundaries.windows(2) {
                    let norm = crate::linalg::norm2(&x[w[0]..w[1]]);
                    if norm > 0.0 {
                        for j in w[0]..w[1] {
                            g[j] = lambda * x[j] / norm;
                        }
                    }
                }
                g
            }
            Regularizer::FusedLasso { .. } => {
                let mut g = vec![0.0; x.len()];
                for i in 0..x.len().saturating_sub(1) {
                    let s = lambda * sign(x[i] - x[i + 1]);
                    g[i] += s;
                    g[i + 1] -= s;
                }
                g
            }
            Regularizer::NuclearNorm { rows, cols, .. } => {
                let m = DenseMatrix::from_row_major(*rows, *cols, x.to_vec())?;
                let dec = svd(&m)?;
                let ones: Vec<f64> = dec
                    .singular_values
                    .iter()
                    .map(|&s| if s > 0.0 { lambda } else { 0.0 })
                    .collect();
                dec.reconstruct_with(&ones).into_vec()
            }
        })
    }

    /// Constant bound on the norm of any subgradient of `h` for a
    /// parameter of length `len`:
    /// L1 `lambda m`, group lasso `lambda g`, fused lasso
    /// `lambda sqrt(2) m (m-1)`, nuclear norm `lambda (d^2 + d)` with
    /// `d = min(rows, cols)`.
    pub fn subgradient_bound(&self, len: usize) -> Result<f64> {
        self.validate(len)?;
        let lambda = self.lambda();
        let m = len as f64;
        Ok(match self {
            Regularizer::L1 { .. } => lambda * m,
            Regularizer::GroupLasso { boundaries, .. } => lambda * (boundaries.len() - 1) as f64,
            Regularizer::FusedLasso { .. } => lambda * std::f64::consts::SQRT_2 * m * (m - 1.0).max(0.0),
            Regularizer::NuclearNorm { rows, cols, .. } => {
                let d = (*rows).min(*cols) as f64;
                lambda * (d * d + d)
            }
        })
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
