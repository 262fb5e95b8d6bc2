//! Asynchronous proximal stochastic gradient methods for regularized
//! least squares: dense linear algebra, proximal operators, the objective,
//! step rules, bounded-delay runtimes and an experiment harness.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod objective;
pub mod proximal;
pub mod runtime;
pub mod solvers;

pub use error::{Error, Result};
