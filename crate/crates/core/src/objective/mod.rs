//! Ridge-regularized least squares, single- or multi-target:
//!
//! `f(X) = (1/n) sum_i [ ||X^T s_i - y_i||^2 + ridge * ||X||_F^2 ]`
//!
//! A parameter is stored as the row-major flattening of the `dim x outputs`
//! matrix `X`; with one output it is an ordinary vector.

mod csv_io;
mod synthetic;

pub use csv_io::{read_dataset_csv, write_dataset_csv};
pub use synthetic::{generate_synthetic, Synthetic, SyntheticConfig};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::proximal::Regularizer;

/// Immutable training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    dim: usize,
    outputs: usize,
    samples: Vec<f64>,
    targets: Vec<f64>,
    ridge_lambda: f64,
}

impl Dataset {
    /// Builds a dataset from per-sample rows.
    pub fn new(samples: Vec<Vec<f64>>, targets: Vec<Vec<f64>>, ridge_lambda: f64) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::Shape("dataset needs at least one sample".into()));
        }
        if targets.len() != n {
            return Err(Error::LengthMismatch {
                what: "targets",
                expected: n,
                got: targets.len(),
            });
        }
        let dim = samples[0].len();
        let outputs = targets[0].len();
        let mut flat_s = Vec::with_capacity(n * dim);
        let mut flat_t = Vec::with_capacity(n * outputs);
        for (s, y) in samples.iter().zip(&targets) {
            if s.len() != dim {
                return Err(Error::LengthMismatch {
                    what: "sample",
                    expected: dim,
                    got: s.len(),
                });
            }
            if y.len() != outputs {
                return Err(Error::LengthMismatch {
                    what: "target",
                    expected: outputs,
                    got: y.len(),
                });
            }
            flat_s.extend_from_slice(s);
            flat_t.extend_from_slice(y);
        }
        Self::from_flat(n, dim, outputs, flat_s, flat_t, ridge_lambda)
    }

    pub fn from_flat(
        n: usize,
        dim: usize,
        outputs: usize,
        samples: Vec<f64>,
        targets: Vec<f64>,
        ridge_lambda: f64,
    ) -> Result<Self> {
        if n == 0 || dim == 0 || outputs == 0 {
            return Err(Error::Shape(format!(
                "dataset dimensions must be positive (n={n}, dim={dim}, outputs={outputs})"
            )));
        }
        if samples.len() != n * dim {
            return Err(Error::LengthMismatch {
                what: "samples",
                expected: n * dim,
                got: samples.len(),
            });
        }
        if targets.len() != n * outputs {
            return Err(Error::LengthMismatch {
                what: "targets",
                expected: n * outputs,
                got: targets.len(),
            });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "samples",
                index,
            });
        }
        if let Some(index) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "targets",
                index,
            });
        }
        if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge_lambda must be finite and nonnegative, got {ridge_lambda}"
            )));
        }
        Ok(Self {
            n,
            dim,
            outputs,
            samples,
            targets,
            ridge_lambda,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of each sample vector.
    #[inline]
    pub fn sample_dim(&self) -> usize {
        self.dim
    }

    /// Number of targets per sample.
    #[inline]
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Length of the flattened parameter, `sample_dim * outputs`.
    #[inline]
    pub fn parameter_len(&self) -> usize {
        self.dim * self.outputs
    }

    #[inline]
    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda
    }

    #[inline]
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.outputs..(i + 1) * self.outputs]
    }

    pub fn with_ridge(&self, ridge_lambda: f64) -> Result<Self> {
        Self::from_flat(
            self.n,
            self.dim,
            self.outputs,
            self.samples.clone(),
            self.targets.clone(),
            ridge_lambda,
        )
    }

    pub fn check_parameter(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.parameter_len() {
            return Err(Error::LengthMismatch {
                what: "parameter",
                expected: self.parameter_len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `X^T s_i - y_i`, written into `out` (length `outputs`).
    fn residual_into(&self, x: &[f64], i: usize, out: &mut [f64]) {
        let q = self.outputs;
        if q == 1 {
            out[0] = dot(self.sample(i), x) - self.target(i)[0];
            return;
        }
        out.copy_from_slice(self.target(i));
        out.iter_mut().for_each(|r| *r = -*r);
        for (j, &s) in self.sample(i).iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let row = &x[j * q..(j + 1) * q];
            for (r, &xv) in out.iter_mut().zip(row) {
                *r += s * xv;
            }
        }
    }

    /// Gradient of the `i`-th summand (0-based index).
    pub fn sample_gradient(&self, x: &[f64], i: usize) -> Result<Vec<f64>> {
        self.check_parameter(x)?;
        if i >= self.n {
            return Err(Error::InvalidParameter(format!(
                "sample index {i} out of range for {} samples",
                self.n
            )));
        }
        let mut g = vec![0.0; x.len()];
        self.sample_gradient_into(x, i, &mut g);
        Ok(g)
    }

    /// Unchecked form of [`Dataset::sample_gradient`] for hot loops.
    pub fn sample_gradient_into(&self, x: &[f64], i: usize, out: &mut [f64]) {
        let q = self.outputs;
        let two_ridge = 2.0 * self.ridge_lambda;
        if q == 1 {
            let r2 = 2.0 * (dot(self.sample(i), x) - self.target(i)[0]);
            for ((g, &s), &xv) in out.iter_mut().zip(self.sample(i)).zip(x) {
                *g = r2 * s + two_ridge * xv;
            }
            return;
        }
        let mut r = vec![0.0; q];
        self.residual_into(x, i, &mut r);
        for (j, &s) in self.sample(i).iter().enumerate() {
            let xrow = &x[j * q..(j + 1) * q];
            let grow = &mut out[j * q..(j + 1) * q];
            for k in 0..q {
                grow[k] = 2.0 * s * r[k] + two_ridge * xrow[k];
            }
        }
    }

    /// `(1/n) sum_i grad f_i(x)`.
    pub fn full_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_parameter(x)?;
        let q = self.outputs;
        let mut g = vec![0.0; x.len()];
        let mut r = vec![0.0; q];
        for i in 0..self.n {
            self.residual_into(x, i, &mut r);
            for (j, &s) in self.sample(i).iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                let grow = &mut g[j * q..(j + 1) * q];
                for k in 0..q {
                    grow[k] += s * r[k];
                }
            }
        }
        let scale = 2.0 / self.n as f64;
        let two_ridge = 2.0 * self.ridge_lambda;
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = scale * *gi + two_ridge * xi;
        }
        Ok(g)
    }

    /// Smooth part `f(x)`.
    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        self.check_parameter(x)?;
        let mut r = vec![0.0; self.outputs];
        let mut total = 0.0;
        for i in 0..self.n {
            self.residual_into(x, i, &mut r);
            total += r.iter().map(|v| v * v).sum::<f64>();
        }
        let ridge = self.ridge_lambda * x.iter().map(|v| v * v).sum::<f64>();
        Ok(total / self.n as f64 + ridge)
    }

    /// `y = H v` on the sample dimension, with `H = 2((1/n) S^T S + ridge I)`.
    pub fn hessian_apply(&self, v: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|e| *e = 0.0);
        for i in 0..self.n {
            let s = self.sample(i);
            let sv = dot(s, v);
            for (yj, sj) in y.iter_mut().zip(s) {
                *yj += sj * sv;
            }
        }
        let scale = 2.0 / self.n as f64;
        let two_ridge = 2.0 * self.ridge_lambda;
        for (yj, vj) in y.iter_mut().zip(v) {
            *yj = scale * *yj + two_ridge * vj;
        }
    }

    /// Explicit `dim x dim` Hessian of a single-target problem.
    pub fn hessian_matrix(&self) -> DenseMatrix {
        let d = self.dim;
        let mut h = DenseMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        let mut col = vec![0.0; d];
        for c in 0..d {
            e[c] = 1.0;
            self.hessian_apply(&e, &mut col);
            for r in 0..d {
                h.set(r, c, col[r]);
            }
            e[c] = 0.0;
        }
        h
    }

    /// Empirical variance of the stochastic gradient,
    /// `max_p (1/n) sum_i ||grad f_i(p) - grad f(p)||^2` over the probes.
    pub fn estimate_variance_bound(&self, probes: &[Vec<f64>]) -> Result<f64> {
        if probes.is_empty() {
            return Err(Error::InvalidParameter(
                "variance estimate needs at least one probe".into(),
            ));
        }
        let mut worst = 0.0_f64;
        let mut gi = vec![0.0; self.parameter_len()];
        for p in probes {
            let full = self.full_gradient(p)?;
            let mut acc = 0.0;
            for i in 0..self.n {
                self.sample_gradient_into(p, i, &mut gi);
                acc += gi
                    .iter()
                    .zip(&full)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
            worst = worst.max(acc / self.n as f64);
        }
        Ok(worst)
    }
}

/// Composite objective `P(x) = f(x) + h(x)`.
pub fn objective_value(ds: &Dataset, reg: &Regularizer, x: &[f64]) -> Result<f64> {
    Ok(ds.loss(x)? + reg.value(x)?)
}
