use super::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Rotation threshold on the normalized off-diagonal Gram entry.
pub const JACOBI_TOLERANCE: f64 = 1e-14;
/// Maximum number of full sweeps over all column pairs.
pub const JACOBI_MAX_SWEEPS: usize = 60;
/// Singular values below this fraction of the largest are reported as zero.
pub const ZERO_SINGULAR_RATIO: f64 = 1e-12;

/// Thin singular value decomposition `x = u * diag(singular_values) * vt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// `rows x d` with orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative, length `d = min(rows, cols)`.
    pub singular_values: Vec<f64>,
    /// `d x cols` with orthonormal rows.
    pub vt: DenseMatrix,
}

impl SvdResult {
    /// Rebuilds `u * diag(sigma) * vt` with the given singular values.
    pub fn reconstruct_with(&self, sigma: &[f64]) -> DenseMatrix {
        let (m, d, q) = (self.u.rows(), self.singular_values.len(), self.vt.cols());
        let mut out = DenseMatrix::zeros(m, q);
        for k in 0..d {
            let s = sigma[k];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let a = self.u.get(i, k) * s;
                if a == 0.0 {
                    continue;
                }
                for j in 0..q {
                    let v = out.get(i, j) + a * self.vt.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.singular_values)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns of the working copy are rotated pairwise until every pair is
/// orthogonal to `JACOBI_TOLERANCE` relative to the product of their norms.
/// Wide inputs are handled through the transpose.
pub fn svd(x: &DenseMatrix) -> Result<SvdResult> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Shape(format!(
            "svd needs a nonempty matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    if let Some(index) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "svd input",
            index,
        });
    }
    if x.rows() >= x.cols() {
        tall_svd(x)
    } else {
        let t = tall_svd(&x.transpose())?;
        Ok(SvdResult {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        })
    }
}

fn tall_svd(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = (a.rows(), a.cols());
    // column-major working copies
    let mut w: Vec<Vec<f64>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            e
        })
        .collect();

    let mut converged = n < 2;
    let mut residual = 0.0;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        residual = 0.0_f64;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if alpha == 0.0 || beta == 0.0 || gamma == 0.0 {
                    continue;
                }
                let off = gamma.abs() / (alpha * beta).sqrt();
                residual = residual.max(off);
                if off <= JACOBI_TOLERANCE {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNotConverged {
            sweeps: JACOBI_MAX_SWEEPS,
            residual,
        });
    }

    let mut order: Vec<(usize, f64)> = w.iter().enumerate().map(|(i, c)| (i, dot(c, c).sqrt())).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let sigma_max = order[0].1;

    let mut u = DenseMatrix::zeros(m, n);
    let mut vt = DenseMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &(src, sigma)) in order.iter().enumerate() {
        for j in 0..n {
            vt.set(k, j, v[src][j]);
        }
        if sigma > 0.0 && sigma >= ZERO_SINGULAR_RATIO * sigma_max {
            singular_values.push(sigma);
            let col: Vec<f64> = w[src].iter().map(|x| x / sigma).collect();
            basis.push(col);
        } else {
            singular_values.push(0.0);
            basis.push(Vec::new());
            missing.push(k);
        }
    }
    complete_orthonormal(&mut basis, &missing, m);
    for (k, col) in basis.iter().enumerate() {
        for i in 0..m {
            u.set(i, k, col[i]);
        }
    }
    Ok(SvdResult {
        u,
        singular_values,
        vt,
    })
}

#[inline]
fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Fills the slots listed in `missing` with unit vectors orthogonal to every
/// other column, drawn from the standard basis by Gram-Schmidt.
fn complete_orthonormal(basis: &mut [Vec<f64>], missing: &[usize], m: usize) {
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < m, "standard basis exhausted while completing u");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for (k, b) in basis.iter().enumerate() {
                    if k == slot || b.is_empty() {
                        continue;
                    }
                    let proj = dot(&e, b);
                    for (x, y) in e.iter_mut().zip(b) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                e.iter_mut().for_each(|x| *x /= norm);
                basis[slot] = e;
                break;
            }
        }
    }
}
