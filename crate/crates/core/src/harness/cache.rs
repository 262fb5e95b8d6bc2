use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::{spectral_bounds, SpectralBounds};
use crate::objective::Dataset;
use crate::proximal::Regularizer;
use crate::solvers::{
    gradient_mapping_norm, solve_reference_with_step, ReferenceSolution, REFERENCE_MAX_ITERATIONS,
};

/// On-disk form of a cached reference solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedReference {
    pub digest: String,
    pub tolerance: f64,
    pub bounds: SpectralBounds,
    pub solution: ReferenceSolution,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    problem: &'a ProblemSpec,
    regularizer: &'a Regularizer,
    reference_tolerance: f64,
    prox: &'a crate::proximal::ProxSolveConfig,
    /// Hash of the dataset file for CSV problems.
    data_file: Option<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over everything that determines `x*`: the problem, the built
/// regularizer, the tolerance and the prox settings. CSV problems also hash
/// the file contents.
pub fn config_digest(cfg: &ExperimentConfig, reg: &Regularizer) -> Result<String> {
    let data_file = match &cfg.problem {
        ProblemSpec::Csv { path, .. } => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            Some(hex(&Sha256::digest(&bytes)))
        }
        ProblemSpec::Synthetic(_) => None,
    };
    let input = DigestInput {
        problem: &cfg.problem,
        regularizer: reg,
        reference_tolerance: cfg.reference_tolerance,
        prox: &cfg.prox,
        data_file,
    };
    let json = serde_json::to_vec(&input)?;
    Ok(hex(&Sha256::digest(&json)))
}

fn cache_path(cfg: &ExperimentConfig, digest: &str) -> Option<PathBuf> {
    cfg.cache_dir
        .as_ref()
        .map(|d| d.join(format!("reference-{digest}.json")))
}

/// A reference solution together with the curvature constants it used.
#[derive(Debug, Clone)]
pub struct LoadedReference {
    pub digest: String,
    pub bounds: SpectralBounds,
    pub solution: ReferenceSolution,
    pub cached: bool,
}

/// Returns the spectral bounds and `x*`, from the cache when possible.
///
/// A cached entry is used only if its digest matches and its
/// gradient-mapping norm at the stored step is still within the tolerance;
/// otherwise both are recomputed and the file is rewritten. A problem that
/// is not strongly convex is refused.
pub fn load_or_solve_reference(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    reg: &Regularizer,
) -> Result<LoadedReference> {
    let digest = config_digest(cfg, reg)?;
    let path = cache_path(cfg, &digest);
    if let Some(p) = &path {
        if let Ok(text) = fs::read_to_string(p) {
            if let Ok(c) = serde_json::from_str::<CachedReference>(&text) {
                if c.digest == digest && c.solution.x.len() == ds.parameter_len() && c.solution.step > 0.0 {
                    let gm = gradient_mapping_norm(ds, reg, &c.solution.x, c.solution.step, &cfg.prox)?;
                    if gm <= cfg.reference_tolerance {
                        return Ok(LoadedReference {
                            digest,
                            bounds: c.bounds,
                            solution: c.solution,
                            cached: true,
                        });
                    }
                }
            }
        }
    }
    let bounds = spectral_bounds(ds);
    if bounds.strong_convexity_warning {
        return Err(Error::Config(format!(
            "objective is not strongly convex (mu <= 1e-10 L with L = {:e}); the reference solution is not unique, add a positive ridge_lambda",
            bounds.l_constant
        )));
    }
    let solution = solve_reference_with_step(
        ds,
        reg,
        cfg.reference_tolerance,
        &cfg.prox,
        1.0 / bounds.l_constant,
        REFERENCE_MAX_ITERATIONS,
    )?;
    if let Some(p) = &path {
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let c = CachedReference {
            digest: digest.clone(),
            tolerance: cfg.reference_tolerance,
            bounds,
            solution: solution.clone(),
        };
        fs::write(p, serde_json::to_vec(&c)?).map_err(|e| Error::io(p, e))?;
    }
    Ok(LoadedReference {
        digest,
        bounds,
        solution,
        cached: false,
    })
}
