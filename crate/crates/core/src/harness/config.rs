use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{read_dataset_csv, Dataset, SyntheticConfig};
use crate::proximal::{ProxSolveConfig, Regularizer};
use crate::runtime::{Algorithm, DelayModel};
use crate::solvers::StepSchedule;

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Synthetic(SyntheticConfig),
    /// A dataset CSV written by `write_dataset_csv`. Relative paths resolve
    /// against the config file's directory.
    Csv {
        path: PathBuf,
        #[serde(default = "one")]
        outputs: usize,
        ridge_lambda: f64,
    },
}

fn one() -> usize {
    1
}

/// Regularizer without the shape details that follow from the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerSpec {
    L1 {
        lambda: f64,
    },
    /// Either `group_size` (uniform contiguous groups) or explicit 0-based
    /// `boundaries`.
    GroupLasso {
        lambda: f64,
        #[serde(default)]
        group_size: Option<usize>,
        #[serde(default)]
        boundaries: Option<Vec<usize>>,
    },
    FusedLasso {
        lambda: f64,
    },
    /// The matrix is `sample_dim x outputs`.
    NuclearNorm {
        lambda: f64,
    },
}

impl RegularizerSpec {
    pub fn build(&self, ds: &Dataset) -> Result<Regularizer> {
        let len = ds.parameter_len();
        let reg = match self {
            RegularizerSpec::L1 { lambda } => Regularizer::l1(*lambda)?,
            RegularizerSpec::FusedLasso { lambda } => Regularizer::fused_lasso(*lambda)?,
            RegularizerSpec::NuclearNorm { lambda } => {
                Regularizer::nuclear_norm(*lambda, ds.sample_dim(), ds.outputs())?
            }
            RegularizerSpec::GroupLasso {
                lambda,
                group_size,
                boundaries,
            } => match (group_size, boundaries) {
                (Some(size), None) => Regularizer::group_lasso_uniform(*lambda, len, *size)?,
                (None, Some(b)) => Regularizer::group_lasso(*lambda, b.clone())?,
                _ => {
                    return Err(Error::Config(
                        "group_lasso needs exactly one of group_size or boundaries".into(),
                    ))
                }
            },
        };
        reg.validate(len)?;
        Ok(reg)
    }
}

/// Step rule; omitted constants are filled from the spectral bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `1 / (mu (t + 1) + u)`; `mu` defaults to the strong-convexity
    /// constant and `u` to `StepSchedule::default_u`.
    Diminishing {
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default)]
        u: Option<f64>,
    },
    /// `1 / (v sqrt(T))`; `v` defaults to `L`.
    Constant {
        #[serde(default)]
        v: Option<f64>,
    },
    /// `1 / (a + b t)`.
    Reciprocal { a: f64, b: f64 },
}

impl ScheduleSpec {
    pub fn build(&self, l: f64, mu: f64, tau: usize, total_iterations: usize) -> Result<StepSchedule> {
        let s = match *self {
            ScheduleSpec::Diminishing { mu: m, u } => {
                let m = m.unwrap_or(mu);
                if !(m > 0.0) {
                    return Err(Error::Config(
                        "diminishing schedule needs mu > 0 but the objective is not strongly convex; set mu explicitly or add a ridge weight".into(),
                    ));
                }
                StepSchedule::Diminishing {
                    mu: m,
                    u: u.unwrap_or_else(|| StepSchedule::default_u(m, tau, l)),
                }
            }
            ScheduleSpec::Constant { v } => StepSchedule::Constant {
                v: v.unwrap_or(l),
                total_iterations,
            },
            ScheduleSpec::Reciprocal { a, b } => StepSchedule::Reciprocal { a, b },
        };
        s.check_admissible(tau, Some(l))?;
        Ok(s)
    }
}

/// Delay mechanism of a simulated run; the seed comes from the seed list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    UniformBounded { tau: usize },
    WorkerQueue { workers: usize },
}

impl DelaySpec {
    pub fn model(&self, seed: u64) -> DelayModel {
        match *self {
            DelaySpec::UniformBounded { tau } => DelayModel::UniformBounded { tau, seed },
            DelaySpec::WorkerQueue { workers } => DelayModel::WorkerQueue { workers, seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExecutionSpec {
    Simulate { delay: DelaySpec },
    Threads { workers: usize },
}

impl ExecutionSpec {
    /// Maximum delay the schedule must tolerate.
    pub fn tau(&self) -> usize {
        match *self {
            ExecutionSpec::Simulate {
                delay: DelaySpec::UniformBounded { tau },
            } => tau,
            ExecutionSpec::Simulate {
                delay: DelaySpec::WorkerQueue { workers },
            }
            | ExecutionSpec::Threads { workers } => workers,
        }
    }
}

fn default_log_every() -> usize {
    100
}

fn default_reference_tolerance() -> f64 {
    1e-9
}

fn default_worker_counts() -> Vec<usize> {
    vec![1, 2, 4]
}

/// One experiment, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub regularizer: RegularizerSpec,
    pub algorithms: Vec<Algorithm>,
    pub schedule: ScheduleSpec,
    pub execution: ExecutionSpec,
    pub total_iterations: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    /// Gradient-mapping tolerance of the reference solve.
    #[serde(default = "default_reference_tolerance")]
    pub reference_tolerance: f64,
    #[serde(default)]
    pub prox: ProxSolveConfig,
    /// Directory for cached reference solutions; no caching when absent.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Thread counts of the speedup experiment; must contain 1.
    #[serde(default = "default_worker_counts")]
    pub worker_counts: Vec<usize>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative dataset and cache paths are resolved
    /// against the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let ProblemSpec::Csv { path: p, .. } = &mut cfg.problem {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(dir) = &mut cfg.cache_dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms: at least one algorithm is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: at least one seed is required".into()));
        }
        if self.total_iterations == 0 {
            return Err(Error::Config("total_iterations must be at least 1".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        if !(self.reference_tolerance > 0.0) {
            return Err(Error::Config("reference_tolerance must be positive".into()));
        }
        if let ExecutionSpec::Threads { workers } = self.execution {
            if workers == 0 {
                return Err(Error::Config("execution.workers must be at least 1".into()));
            }
            if self.algorithms.contains(&Algorithm::Psgd) {
                return Err(Error::Config(
                    "psgd cannot run in threads mode; use execution.mode = simulate".into(),
                ));
            }
        }
        if let ProblemSpec::Synthetic(s) = &self.problem {
            s.validate()?;
        }
        self.prox.validate()
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.problem {
            ProblemSpec::Synthetic(s) => Ok(crate::objective::generate_synthetic(s)?.dataset),
            ProblemSpec::Csv {
                path,
                outputs,
                ridge_lambda,
            } => read_dataset_csv(path, *outputs, *ridge_lambda),
        }
    }
}
