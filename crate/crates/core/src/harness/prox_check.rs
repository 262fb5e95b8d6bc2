use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::norm2;
use crate::proximal::{prox_oracle, ProxSolveConfig, Regularizer};

pub const VARIANTS: [&str; 4] = ["l1", "group_lasso", "fused_lasso", "nuclear_norm"];

/// Subgradient iterations given to the oracle per instance.
const ORACLE_BUDGET: usize = 20_000;

/// A random proximal problem `Prox_{eta,h}(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxInstance {
    pub regularizer: Regularizer,
    pub x: Vec<f64>,
    pub eta: f64,
}

/// Draws an instance of `variant` (one of [`VARIANTS`]): vectors of length
/// 1 to 10, matrices up to 4x4, `lambda` and `eta` log-uniform on
/// `[0.05, 2]`, entries `N(0, 2^2)`.
pub fn random_instance<R: Rng + ?Sized>(variant: &str, rng: &mut R) -> ProxInstance {
    let log_uniform = |rng: &mut R| (rng.random_range(0.05f64.ln()..2f64.ln())).exp();
    let lambda = log_uniform(rng);
    let eta = log_uniform(rng);
    let (regularizer, len) = match variant {
        "l1" => {
            let len = rng.random_range(1..=10);
            (Regularizer::L1 { lambda }, len)
        }
        "group_lasso" => {
            let len = rng.random_range(1..=10);
            let mut boundaries = vec![0];
            for k in 1..len {
                if rng.random_bool(0.4) {
                    boundaries.push(k);
                }
            }
            boundaries.push(len);
            (Regularizer::GroupLasso { lambda, boundaries }, len)
        }
        "fused_lasso" => {
            let len = rng.random_range(1..=10);
            (Regularizer::FusedLasso { lambda }, len)
        }
        "nuclear_norm" => {
            let rows = rng.random_range(1..=4);
            let cols = rng.random_range(1..=4);
            (Regularizer::NuclearNorm { lambda, rows, cols }, rows * cols)
        }
        other => panic!("unknown regularizer variant {other}"),
    };
    let x = (0..len)
        .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ProxInstance { regularizer, x, eta }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxCheckRow {
    pub variant: String,
    pub instances: usize,
    /// `max ||prox - oracle||_2` over the instances.
    pub max_deviation: f64,
}

/// Compares `Regularizer::prox` with the independent oracle on `trials`
/// seeded random instances per variant.
pub fn prox_check(trials: usize, seed: u64) -> Result<Vec<ProxCheckRow>> {
    let cfg = ProxSolveConfig::default();
    VARIANTS
        .iter()
        .enumerate()
        .map(|(k, &variant)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut max_deviation: f64 = 0.0;
            for _ in 0..trials {
                let inst = random_instance(variant, &mut rng);
                let p = inst.regularizer.prox(&inst.x, inst.eta, &cfg)?;
                let o = prox_oracle(&inst.regularizer, &inst.x, inst.eta, ORACLE_BUDGET, &mut rng)?;
                let diff: Vec<f64> = p.iter().zip(&o).map(|(a, b)| a - b).collect();
                max_deviation = max_deviation.max(norm2(&diff));
            }
            Ok(ProxCheckRow {
                variant: variant.to_string(),
                instances: trials,
                max_deviation,
            })
        })
        .collect()
}
