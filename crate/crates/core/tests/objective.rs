mod common;

use common::{gaussian_vec, linear_solve, loss_oracle, norm, ridge_normal_equations, synthetic};
use dapsgd::objective::{
    generate_synthetic, objective_value, read_dataset_csv, write_dataset_csv, Dataset,
    SyntheticConfig,
};
use dapsgd::proximal::Regularizer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central difference of `g` at `x` along every coordinate.
fn finite_difference(g: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[j] += h;
            b[j] -= h;
            (g(&a) - g(&b)) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1.0)
}

/// `f_i` written out directly.
fn summand(ds: &Dataset, i: usize, x: &[f64]) -> f64 {
    let q = ds.outputs();
    let s = ds.sample(i);
    let mut r2 = 0.0;
    for k in 0..q {
        let pred: f64 = s.iter().enumerate().map(|(j, sj)| sj * x[j * q + k]).sum();
        r2 += (pred - ds.target(i)[k]).powi(2);
    }
    r2 + ds.ridge_lambda() * x.iter().map(|v| v * v).sum::<f64>()
}

#[test]
fn sample_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (targets, seed) in [(1, 3), (3, 4)] {
        let ds = synthetic(15, 5, targets, 0.4, seed);
        for i in 0..ds.n() {
            let x = gaussian_vec(&mut rng, ds.parameter_len(), 1.0);
            let g = ds.sample_gradient(&x, i).unwrap();
            let fd = finite_difference(|y| summand(&ds, i, y), &x, 1e-6);
            assert!(relative_error(&g, &fd) <= 1e-5);
        }
    }
}

#[test]
fn full_gradient_matches_finite_differences_of_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ds = synthetic(25, 6, 2, 0.3, 5);
    let reg = Regularizer::l1(0.2).unwrap();
    for _ in 0..50 {
        let x = gaussian_vec(&mut rng, ds.parameter_len(), 1.0);
        let smooth = |y: &[f64]| objective_value(&ds, &reg, y).unwrap() - reg.value(y).unwrap();
        let fd = finite_difference(smooth, &x, 1e-6);
        assert!(relative_error(&ds.full_gradient(&x).unwrap(), &fd) <= 1e-5);
    }
}

#[test]
fn full_gradient_is_the_mean_of_sample_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ds = synthetic(30, 4, 2, 0.1, 6);
    let x = gaussian_vec(&mut rng, ds.parameter_len(), 1.0);
    let mut mean = vec![0.0; x.len()];
    for i in 0..ds.n() {
        for (m, g) in mean.iter_mut().zip(ds.sample_gradient(&x, i).unwrap()) {
            *m += g / ds.n() as f64;
        }
    }
    let full = ds.full_gradient(&x).unwrap();
    for (a, b) in full.iter().zip(&mean) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn full_gradient_is_affine() {
    // g(a x + (1-a) y) = a g(x) + (1-a) g(y) for a quadratic
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ds = synthetic(20, 5, 1, 0.2, 7);
    let x = gaussian_vec(&mut rng, 5, 1.0);
    let y = gaussian_vec(&mut rng, 5, 1.0);
    let a = 0.3;
    let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + (1.0 - a) * q).collect();
    let (gx, gy, gz) = (
        ds.full_gradient(&x).unwrap(),
        ds.full_gradient(&y).unwrap(),
        ds.full_gradient(&z).unwrap(),
    );
    for k in 0..5 {
        assert!((gz[k] - (a * gx[k] + (1.0 - a) * gy[k])).abs() <= 1e-12);
    }
}

#[test]
fn loss_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for targets in [1, 3] {
        let ds = synthetic(20, 4, targets, 0.7, 8);
        for _ in 0..20 {
            let x = gaussian_vec(&mut rng, ds.parameter_len(), 2.0);
            let a = ds.loss(&x).unwrap();
            let b = loss_oracle(&ds, &x);
            assert!((a - b).abs() <= 1e-10 * b.max(1.0));
        }
    }
}

#[test]
fn objective_examples() {
    let ds = Dataset::new(vec![vec![0.0, 0.0]], vec![vec![0.0]], 0.0).unwrap();
    let reg = Regularizer::l1(1.0).unwrap();
    assert_eq!(objective_value(&ds, &reg, &[0.0, 0.0]).unwrap(), 0.0);
    let ds = Dataset::new(vec![vec![1.0]], vec![vec![1.0]], 0.0).unwrap();
    assert_eq!(objective_value(&ds, &reg, &[1.0]).unwrap(), 1.0);
}

#[test]
fn unregularized_minimizer_has_zero_gradient() {
    let ds = synthetic(40, 6, 1, 0.05, 9);
    let (a, b) = ridge_normal_equations(&ds);
    let x = linear_solve(a, b);
    assert!(norm(&ds.full_gradient(&x).unwrap()) <= 1e-8);
}

#[test]
fn noiseless_data_recovers_the_ground_truth() {
    let syn = generate_synthetic(&SyntheticConfig {
        n: 50,
        m: 8,
        targets: 1,
        ridge_lambda: 0.0,
        noise_std: 0.0,
        ground_truth_sparsity: 0.0,
        seed: 10,
    })
    .unwrap();
    let (a, b) = ridge_normal_equations(&syn.dataset);
    let x = linear_solve(a, b);
    for (p, q) in x.iter().zip(&syn.ground_truth) {
        assert!((p - q).abs() <= 1e-6);
    }
}

#[test]
fn generator_is_deterministic_and_honours_sparsity() {
    let cfg = SyntheticConfig {
        n: 1000,
        m: 5000,
        targets: 1,
        ridge_lambda: 0.1,
        noise_std: 0.1,
        ground_truth_sparsity: 0.8,
        seed: 11,
    };
    let a = generate_synthetic(&cfg).unwrap();
    let b = generate_synthetic(&cfg).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.ground_truth, b.ground_truth);
    assert_eq!((a.dataset.n(), a.dataset.sample_dim()), (1000, 5000));
    let zeros = a.ground_truth.iter().filter(|v| **v == 0.0).count();
    assert_eq!(zeros, 4000);
    assert!(a.ground_truth.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
}

#[test]
fn variance_bound_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let syn = generate_synthetic(&SyntheticConfig {
        n: 30,
        m: 5,
        targets: 1,
        ridge_lambda: 0.2,
        noise_std: 0.3,
        ground_truth_sparsity: 0.4,
        seed: 12,
    })
    .unwrap();
    let ds = &syn.dataset;
    let probes = vec![vec![0.0; 5], syn.ground_truth.clone(), gaussian_vec(&mut rng, 5, 1.0)];
    let mut brute: f64 = 0.0;
    for p in &probes {
        let full = ds.full_gradient(p).unwrap();
        let mut v = 0.0;
        for i in 0..ds.n() {
            let g = ds.sample_gradient(p, i).unwrap();
            v += g.iter().zip(&full).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        brute = brute.max(v / ds.n() as f64);
    }
    let est = ds.estimate_variance_bound(&probes).unwrap();
    assert!((est - brute).abs() <= 1e-12 * brute.max(1.0));
}

#[test]
fn variance_of_a_single_sample_is_zero() {
    let ds = Dataset::new(vec![vec![1.0, -2.0]], vec![vec![0.5]], 0.1).unwrap();
    assert_eq!(ds.estimate_variance_bound(&[vec![0.3, 0.1]]).unwrap(), 0.0);
}

#[test]
fn csv_roundtrip_preserves_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let ds = synthetic(12, 4, 3, 0.25, 13);
    write_dataset_csv(&ds, &path).unwrap();
    let back = read_dataset_csv(&path, 3, 0.25).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn out_of_range_sample_is_an_error() {
    let ds = synthetic(5, 2, 1, 0.1, 14);
    assert!(ds.sample_gradient(&[0.0, 0.0], 5).is_err());
    assert!(ds.sample_gradient(&[0.0], 0).is_err());
}
