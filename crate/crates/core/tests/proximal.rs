mod common;

use common::{gaussian_vec, inner, norm, sub};
use dapsgd::harness::{random_instance, VARIANTS};
use dapsgd::proximal::{prox_objective, prox_oracle, ProxSolveConfig, Regularizer};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ProxSolveConfig {
    ProxSolveConfig::default()
}

#[test]
fn l1_matches_scalar_soft_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let lambda = rng.random_range(0.01..3.0);
        let eta = rng.random_range(0.01..3.0);
        let x = gaussian_vec(&mut rng, 7, 2.0);
        let p = Regularizer::l1(lambda).unwrap().prox(&x, eta, &cfg()).unwrap();
        for (pi, xi) in p.iter().zip(&x) {
            let t = eta * lambda;
            let expect = xi.signum() * (xi.abs() - t).max(0.0);
            assert!((pi - expect).abs() <= 1e-15 * xi.abs().max(1.0));
        }
    }
}

#[test]
fn group_lasso_matches_block_shrinkage() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let lambda = rng.random_range(0.01..3.0);
        let eta = rng.random_range(0.01..3.0);
        let x = gaussian_vec(&mut rng, 9, 1.5);
        let b = vec![0, 2, 3, 7, 9];
        let p = Regularizer::group_lasso(lambda, b.clone())
            .unwrap()
            .prox(&x, eta, &cfg())
            .unwrap();
        for w in b.windows(2) {
            let blk = &x[w[0]..w[1]];
            let nb = norm(blk);
            let scale = (1.0 - eta * lambda / nb).max(0.0);
            for (j, v) in blk.iter().enumerate() {
                assert!((p[w[0] + j] - scale * v).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn nuclear_norm_shrinks_a_rank_one_matrix() {
    // X = a u v^T with unit u, v has the single singular value a
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let mut u = gaussian_vec(&mut rng, 3, 1.0);
        let mut v = gaussian_vec(&mut rng, 4, 1.0);
        let (nu, nv) = (norm(&u), norm(&v));
        u.iter_mut().for_each(|e| *e /= nu);
        v.iter_mut().for_each(|e| *e /= nv);
        let a = rng.random_range(0.5..4.0);
        let eta = 0.5;
        let lambda = rng.random_range(0.1..2.0);
        let x: Vec<f64> = (0..12).map(|k| a * u[k / 4] * v[k % 4]).collect();
        let p = Regularizer::nuclear_norm(lambda, 3, 4)
            .unwrap()
            .prox(&x, eta, &cfg())
            .unwrap();
        let shrunk = (a - eta * lambda).max(0.0);
        for k in 0..12 {
            assert!((p[k] - shrunk * u[k / 4] * v[k % 4]).abs() <= 1e-12);
        }
    }
}

#[test]
fn fused_lasso_two_coordinates_closed_form() {
    // for m = 2 the prox moves both entries toward each other by at most
    // eta*lambda, meeting at the mean when they would cross
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let x = gaussian_vec(&mut rng, 2, 2.0);
        let eta = rng.random_range(0.05..2.0);
        let lambda = rng.random_range(0.05..2.0);
        let t = eta * lambda;
        let gap = x[0] - x[1];
        let expect = if gap.abs() <= 2.0 * t {
            let mean = 0.5 * (x[0] + x[1]);
            [mean, mean]
        } else {
            let s = gap.signum() * t;
            [x[0] - s, x[1] + s]
        };
        let p = Regularizer::fused_lasso(lambda).unwrap().prox(&x, eta, &cfg()).unwrap();
        assert!((p[0] - expect[0]).abs() <= 1e-9 && (p[1] - expect[1]).abs() <= 1e-9, "{p:?} {expect:?}");
    }
}

#[test]
fn prox_is_non_expansive() {
    for (k, variant) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        for _ in 0..200 {
            let inst = random_instance(variant, &mut rng);
            let y: Vec<f64> = inst
                .x
                .iter()
                .map(|v| v + rng.random_range(-1.0..1.0))
                .collect();
            let px = inst.regularizer.prox(&inst.x, inst.eta, &cfg()).unwrap();
            let py = inst.regularizer.prox(&y, inst.eta, &cfg()).unwrap();
            assert!(norm(&sub(&px, &py)) <= norm(&sub(&inst.x, &y)) + 1e-10, "{variant}");
        }
    }
}

#[test]
fn prox_output_satisfies_the_subgradient_inclusion() {
    for (k, variant) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + k as u64);
        for _ in 0..100 {
            let inst = random_instance(variant, &mut rng);
            let reg = &inst.regularizer;
            let p = reg.prox(&inst.x, inst.eta, &cfg()).unwrap();
            let g: Vec<f64> = sub(&inst.x, &p).iter().map(|v| v / inst.eta).collect();
            let hp = reg.value(&p).unwrap();
            for _ in 0..50 {
                let z = gaussian_vec(&mut rng, p.len(), 3.0);
                let slack = reg.value(&z).unwrap() - hp - inner(&g, &sub(&z, &p));
                assert!(slack >= -1e-8, "{variant}: slack {slack}");
            }
        }
    }
}

#[test]
fn prox_objective_dominance() {
    for (k, variant) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + k as u64);
        for _ in 0..50 {
            let inst = random_instance(variant, &mut rng);
            let reg = &inst.regularizer;
            let p = reg.prox(&inst.x, inst.eta, &cfg()).unwrap();
            let o = prox_oracle(reg, &inst.x, inst.eta, 20_000, &mut rng).unwrap();
            let at = |y: &[f64]| prox_objective(reg, &inst.x, inst.eta, y).unwrap();
            assert!(at(&p) <= at(&inst.x) + 1e-12);
            assert!(at(&p) <= at(&o) + 1e-8, "{variant}");
        }
    }
}

#[test]
fn oracle_agrees_with_prox() {
    for (k, variant) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + k as u64);
        for _ in 0..50 {
            let inst = random_instance(variant, &mut rng);
            let p = inst.regularizer.prox(&inst.x, inst.eta, &cfg()).unwrap();
            let o = prox_oracle(&inst.regularizer, &inst.x, inst.eta, 20_000, &mut rng).unwrap();
            assert!(norm(&sub(&p, &o)) <= 1e-5, "{variant}");
        }
    }
}

#[test]
fn subgradients_respect_the_constant_bounds() {
    for (k, variant) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + k as u64);
        for _ in 0..200 {
            let inst = random_instance(variant, &mut rng);
            let reg = &inst.regularizer;
            let bound = reg.subgradient_bound(inst.x.len()).unwrap();
            let g = reg.subgradient(&inst.x).unwrap();
            assert!(norm(&g) <= bound * (1.0 + 1e-12), "{variant}");
            // (x - prox(x)) / eta is a subgradient at prox(x)
            let p = reg.prox(&inst.x, inst.eta, &cfg()).unwrap();
            let w: Vec<f64> = sub(&inst.x, &p).iter().map(|v| v / inst.eta).collect();
            assert!(norm(&w) <= bound * (1.0 + 1e-9) + 1e-9, "{variant}");
        }
    }
}

#[test]
fn subgradient_is_in_the_subdifferential() {
    for (k, variant) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + k as u64);
        for _ in 0..50 {
            let inst = random_instance(variant, &mut rng);
            let reg = &inst.regularizer;
            let g = reg.subgradient(&inst.x).unwrap();
            let hx = reg.value(&inst.x).unwrap();
            for _ in 0..20 {
                let z = gaussian_vec(&mut rng, inst.x.len(), 3.0);
                let slack = reg.value(&z).unwrap() - hx - inner(&g, &sub(&z, &inst.x));
                assert!(slack >= -1e-9, "{variant}: {slack}");
            }
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Regularizer::l1(0.0).is_err());
    assert!(Regularizer::l1(f64::NAN).is_err());
    assert!(Regularizer::group_lasso(1.0, vec![1, 3]).is_err());
    assert!(Regularizer::group_lasso(1.0, vec![0, 2, 2]).is_err());
    assert!(Regularizer::nuclear_norm(1.0, 0, 3).is_err());
    let g = Regularizer::group_lasso(1.0, vec![0, 2, 4]).unwrap();
    assert!(g.prox(&[1.0, 2.0, 3.0], 1.0, &cfg()).is_err());
    let l1 = Regularizer::l1(1.0).unwrap();
    assert!(l1.prox(&[1.0], 0.0, &cfg()).is_err());
}

proptest! {
    #[test]
    fn l1_prox_never_increases_magnitude(x in prop::collection::vec(-10.0f64..10.0, 1..20), eta in 0.01f64..5.0) {
        let p = Regularizer::l1(0.7).unwrap().prox(&x, eta, &cfg()).unwrap();
        for (pi, xi) in p.iter().zip(&x) {
            prop_assert!(pi.abs() <= xi.abs());
            prop_assert!(pi * xi >= 0.0);
        }
    }

    #[test]
    fn fused_prox_preserves_the_mean(x in prop::collection::vec(-5.0f64..5.0, 1..12), lambda in 0.01f64..2.0) {
        // the fused penalty is invariant to shifts, so the prox keeps the mean
        let p = Regularizer::fused_lasso(lambda).unwrap().prox(&x, 0.5, &cfg()).unwrap();
        let mx: f64 = x.iter().sum::<f64>() / x.len() as f64;
        let mp: f64 = p.iter().sum::<f64>() / p.len() as f64;
        prop_assert!((mx - mp).abs() <= 1e-9);
    }

    #[test]
    fn group_prox_keeps_block_directions(x in prop::collection::vec(-5.0f64..5.0, 4), lambda in 0.01f64..3.0) {
        let p = Regularizer::group_lasso(lambda, vec![0, 2, 4]).unwrap().prox(&x, 1.0, &cfg()).unwrap();
        for w in [[0usize, 2], [2, 4]] {
            let xb = &x[w[0]..w[1]];
            let pb = &p[w[0]..w[1]];
            let cross = xb[0] * pb[1] - xb[1] * pb[0];
            prop_assert!(cross.abs() <= 1e-12);
            prop_assert!(inner(xb, pb) >= 0.0);
        }
    }
}
