mod common;

use common::{gaussian_vec, inner, norm, sub, synthetic};
use dapsgd::linalg::{spectral_bounds, svd, symmetric_eigen, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, gaussian_vec(rng, rows * cols, 1.0)).unwrap()
}

fn gram_defect(m: &DenseMatrix, by_columns: bool) -> f64 {
    let g = if by_columns {
        m.transpose().matmul(m).unwrap()
    } else {
        m.matmul(&m.transpose()).unwrap()
    };
    g.distance(&DenseMatrix::identity(g.rows()))
}

#[test]
fn svd_invariants_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let (r, c) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let x = random_matrix(&mut rng, r, c);
        let d = svd(&x).unwrap();
        let scale = x.frobenius_norm().max(1.0);
        assert!(d.reconstruct().distance(&x) <= 1e-10 * scale);
        assert!(gram_defect(&d.u, true) <= 1e-10);
        assert!(gram_defect(&d.vt, false) <= 1e-10);
        assert_eq!(d.singular_values.len(), r.min(c));
        assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.singular_values.iter().all(|s| *s >= 0.0));
    }
}

#[test]
fn svd_of_rank_deficient_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let a = random_matrix(&mut rng, 5, 2);
        let b = random_matrix(&mut rng, 2, 4);
        let x = a.matmul(&b).unwrap();
        let d = svd(&x).unwrap();
        assert!(d.reconstruct().distance(&x) <= 1e-10 * x.frobenius_norm());
        assert!(gram_defect(&d.u, true) <= 1e-10);
        assert!(gram_defect(&d.vt, false) <= 1e-10);
        assert!(d.singular_values[2..].iter().all(|s| *s <= 1e-10 * d.singular_values[0]));
    }
}

#[test]
fn transpose_has_the_same_singular_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let (r, c) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let x = random_matrix(&mut rng, r, c);
        let a = svd(&x).unwrap().singular_values;
        let b = svd(&x.transpose()).unwrap().singular_values;
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-12 * a[0].max(1.0));
        }
    }
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    // sigma_k^2 are the eigenvalues of X^T X; the eigen solver is a
    // different algorithm from the one-sided SVD
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let x = random_matrix(&mut rng, 5, 3);
        let sigma = svd(&x).unwrap().singular_values;
        let eig = symmetric_eigen(&x.transpose().matmul(&x).unwrap()).unwrap();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
        ev.reverse();
        for (s, e) in sigma.iter().zip(&ev) {
            assert!((s - e).abs() <= 1e-9 * sigma[0]);
        }
    }
}

#[test]
fn svd_rejects_non_finite_input() {
    let x = DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]);
    assert!(x.is_err());
}

/// Explicit `2((1/n) S^T S + ridge I)`, built here independently of the
/// library's Hessian routines.
fn explicit_hessian(ds: &dapsgd::objective::Dataset) -> DenseMatrix {
    let (n, m) = (ds.n(), ds.sample_dim());
    let mut h = DenseMatrix::zeros(m, m);
    for i in 0..n {
        let s = ds.sample(i);
        for r in 0..m {
            for c in 0..m {
                h.set(r, c, h.get(r, c) + 2.0 * s[r] * s[c] / n as f64);
            }
        }
    }
    for r in 0..m {
        h.set(r, r, h.get(r, r) + 2.0 * ds.ridge_lambda());
    }
    h
}

#[test]
fn spectral_bounds_match_dense_eigen_oracle() {
    for seed in 0..5 {
        let ds = synthetic(20, 5, 1, 0.3, seed);
        let b = spectral_bounds(&ds);
        let eig = symmetric_eigen(&explicit_hessian(&ds)).unwrap();
        let lo = eig.eigenvalues[0];
        let hi = *eig.eigenvalues.last().unwrap();
        assert!(((b.l_constant - hi) / hi).abs() <= 1e-6, "{} vs {hi}", b.l_constant);
        assert!(((b.mu_constant - lo) / lo).abs() <= 1e-6, "{} vs {lo}", b.mu_constant);
        assert!(b.converged && !b.strong_convexity_warning);
    }
}

#[test]
fn ridge_bounds_the_smallest_curvature() {
    for seed in 0..5 {
        let ds = synthetic(8, 12, 1, 0.25, seed);
        let b = spectral_bounds(&ds);
        assert!(b.mu_constant >= 0.5);
        assert!(b.l_constant >= b.mu_constant);
    }
}

#[test]
fn rank_deficient_without_ridge_is_flagged() {
    let ds = synthetic(3, 6, 1, 0.0, 4);
    let b = spectral_bounds(&ds);
    assert!(b.strong_convexity_warning);
    assert_eq!(b.mu_constant, 0.0);
}

#[test]
fn gradient_inequalities_hold_with_the_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (targets, seed) in [(1, 1), (3, 2)] {
        let ds = synthetic(30, 6, targets, 0.2, seed);
        let b = spectral_bounds(&ds);
        let len = ds.parameter_len();
        for _ in 0..100 {
            let x = gaussian_vec(&mut rng, len, 2.0);
            let y = gaussian_vec(&mut rng, len, 2.0);
            let gx = ds.full_gradient(&x).unwrap();
            let gy = ds.full_gradient(&y).unwrap();
            let dx = sub(&x, &y);
            let dd = inner(&dx, &dx);
            let co = inner(&sub(&gx, &gy), &dx);
            assert!(co <= b.l_constant * dd * (1.0 + 1e-9));
            assert!(co >= b.mu_constant * dd * (1.0 - 1e-9));
            assert!(norm(&sub(&gx, &gy)) <= b.l_constant * norm(&dx) * (1.0 + 1e-9));
            let fx = ds.loss(&x).unwrap();
            let fy = ds.loss(&y).unwrap();
            let slack = fx - fy - inner(&gy, &dx) - 0.5 * b.mu_constant * dd;
            assert!(slack >= -1e-8, "strong convexity slack {slack}");
        }
    }
}
