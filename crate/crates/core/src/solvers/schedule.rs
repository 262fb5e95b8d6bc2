use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when comparing a step size against `1 / L`.
const STEP_SLACK: f64 = 1e-12;

/// Step-size rule `eta_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `1 / (mu (t + 1) + u)`.
    Diminishing { mu: f64, u: f64 },
    /// `1 / (v sqrt(T))` for every `t`.
    Constant { v: f64, total_iterations: usize },
    /// `1 / (a + b t)`.
    Reciprocal { a: f64, b: f64 },
}

impl StepSchedule {
    pub fn step_size(&self, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            StepSchedule::Diminishing { mu, u } => 1.0 / (mu * (t + 1.0) + u),
            StepSchedule::Constant { v, total_iterations } => {
                1.0 / (v * (total_iterations as f64).sqrt())
            }
            StepSchedule::Reciprocal { a, b } => 1.0 / (a + b * t),
        }
    }

    /// Smallest `u` with `u > (2 tau - 1) mu` and `1 / (mu + u) <= 1 / L`,
    /// doubled for margin.
    pub fn default_u(mu: f64, tau: usize, l_constant: f64) -> f64 {
        let staleness = (2.0 * tau as f64 - 1.0) * mu;
        let lipschitz = l_constant - mu;
        2.0 * staleness.max(lipschitz).max(mu)
    }

    /// Diminishing schedule with [`StepSchedule::default_u`].
    pub fn diminishing_default(mu: f64, tau: usize, l_constant: f64) -> Self {
        StepSchedule::Diminishing {
            mu,
            u: Self::default_u(mu, tau, l_constant),
        }
    }

    /// Checks the parameters and the conditions that make the schedule safe
    /// under delays up to `tau`: for the diminishing rule
    /// `u > (2 tau - 1) mu` (so `eta_t <= eta_{d(t)}`), and `eta_0 <= 1 / L`
    /// for the diminishing and constant rules when `L` is given.
    pub fn check_admissible(&self, tau: usize, l_constant: Option<f64>) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("schedule parameter {name} must be positive, got {v}")))
            }
        };
        match *self {
            StepSchedule::Diminishing { mu, u } => {
                positive("mu", mu)?;
                positive("u", u)?;
                let bound = (2.0 * tau as f64 - 1.0) * mu;
                if u <= bound {
                    return Err(Error::Config(format!(
                        "diminishing schedule needs u > (2 tau - 1) mu = {bound} for tau = {tau}, got u = {u}"
                    )));
                }
            }
            StepSchedule::Constant { v, total_iterations } => {
                positive("v", v)?;
                if total_iterations == 0 {
                    return Err(Error::Config("constant schedule needs total_iterations >= 1".into()));
                }
            }
            StepSchedule::Reciprocal { a, b } => {
                positive("a", a)?;
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(Error::Config(format!(
                        "schedule parameter b must be nonnegative, got {b}"
                    )));
                }
                return Ok(());
            }
        }
        if let Some(l) = l_constant {
            let eta0 = self.step_size(0);
            if eta0 * l > 1.0 + STEP_SLACK {
                return Err(Error::Config(format!(
                    "initial step {eta0:e} exceeds 1/L = {:e}",
                    1.0 / l
                )));
            }
        }
        Ok(())
    }
}
