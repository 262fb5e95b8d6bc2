use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Parameters of the random least-squares generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    /// Sample dimension.
    pub m: usize,
    /// Targets per sample; 1 for vector problems.
    #[serde(default = "one")]
    pub targets: usize,
    pub ridge_lambda: f64,
    #[serde(default)]
    pub noise_std: f64,
    /// Fraction of ground-truth entries that are zero.
    #[serde(default)]
    pub ground_truth_sparsity: f64,
    pub seed: u64,
}

fn one() -> usize {
    1
}

/// A generated dataset together with the parameter that produced it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Row-major `m x targets` ground truth.
    pub ground_truth: Vec<f64>,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.targets == 0 {
            return Err(Error::Config(format!(
                "synthetic sizes must be positive (n={}, m={}, targets={})",
                self.n, self.m, self.targets
            )));
        }
        if !(0.0..=1.0).contains(&self.ground_truth_sparsity) {
            return Err(Error::Config(format!(
                "ground_truth_sparsity must lie in [0, 1], got {}",
                self.ground_truth_sparsity
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!(
                "noise_std must be finite and nonnegative, got {}",
                self.noise_std
            )));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::Config(format!(
                "ridge_lambda must be finite and nonnegative, got {}",
                self.ridge_lambda
            )));
        }
        Ok(())
    }
}

/// Standard normal samples, a +-1 ground truth on a random support, and
/// targets `X_true^T s_i + noise`. Fully determined by `cfg.seed`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, m, q) = (cfg.n, cfg.m, cfg.targets);
    let len = m * q;

    let nonzeros = ((1.0 - cfg.ground_truth_sparsity) * len as f64).round() as usize;
    let mut ground_truth = vec![0.0; len];
    for idx in sample_indices(&mut rng, len, nonzeros.min(len)) {
        ground_truth[idx] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }

    let samples: Vec<f64> = (0..n * m)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut targets = vec![0.0; n * q];
    for i in 0..n {
        let s = &samples[i * m..(i + 1) * m];
        for k in 0..q {
            let clean: f64 = (0..m).map(|j| s[j] * ground_truth[j * q + k]).sum();
            let noise = if cfg.noise_std > 0.0 {
                cfg.noise_std * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            targets[i * q + k] = clean + noise;
        }
    }
    let dataset = Dataset::from_flat(n, m, q, samples, targets, cfg.ridge_lambda)?;
    Ok(Synthetic {
        dataset,
        ground_truth,
    })
}
