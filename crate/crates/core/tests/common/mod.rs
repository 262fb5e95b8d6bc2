#![allow(dead_code)]

use dapsgd::objective::{generate_synthetic, Dataset, SyntheticConfig};
use rand::Rng;
use rand_distr::StandardNormal;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn linear_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-300, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Normal equations of the single-target ridge problem:
/// `((1/n) S^T S + ridge I) x = (1/n) S^T y`.
pub fn ridge_normal_equations(ds: &Dataset) -> (Vec<Vec<f64>>, Vec<f64>) {
    assert_eq!(ds.outputs(), 1);
    let (n, m) = (ds.n(), ds.sample_dim());
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..n {
        let s = ds.sample(i);
        let y = ds.target(i)[0];
        for r in 0..m {
            b[r] += s[r] * y / n as f64;
            for c in 0..m {
                a[r][c] += s[r] * s[c] / n as f64;
            }
        }
    }
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += ds.ridge_lambda();
    }
    (a, b)
}

/// Direct evaluation of `f(x) = (1/n) sum_i ||X^T s_i - y_i||^2 + ridge ||X||^2`.
pub fn loss_oracle(ds: &Dataset, x: &[f64]) -> f64 {
    let q = ds.outputs();
    let mut total = 0.0;
    for i in 0..ds.n() {
        let s = ds.sample(i);
        for k in 0..q {
            let pred: f64 = s.iter().enumerate().map(|(j, sj)| sj * x[j * q + k]).sum();
            let r = pred - ds.target(i)[k];
            total += r * r;
        }
    }
    total / ds.n() as f64 + ds.ridge_lambda() * x.iter().map(|v| v * v).sum::<f64>()
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn synthetic(n: usize, m: usize, targets: usize, ridge: f64, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticConfig {
        n,
        m,
        targets,
        ridge_lambda: ridge,
        noise_std: 0.1,
        ground_truth_sparsity: 0.5,
        seed,
    })
    .unwrap()
    .dataset
}

/// The desk-scale L1 problem of the trend checks: n = 100, m = 20, ridge 0.5.
pub fn desk_l1_dataset() -> Dataset {
    generate_synthetic(&SyntheticConfig {
        n: 100,
        m: 20,
        targets: 1,
        ridge_lambda: 0.5,
        noise_std: 0.1,
        ground_truth_sparsity: 0.7,
        seed: 20_240,
    })
    .unwrap()
    .dataset
}

/// Median, NaN-free input assumed.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    if s.len() % 2 == 1 {
        s[k]
    } else {
        0.5 * (s[k - 1] + s[k])
    }
}
