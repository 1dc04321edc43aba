//! Set-valued state and parameter estimation with self-triggered min-max
//! model predictive control.
//!
//! The crate is layered bottom-up:
//!
//! * [`set`]: zonotope calculus with guaranteed (outer) enclosures,
//! * [`uncertainty`]: bounded-drift parameter sets and their propagation,
//! * [`estimator`]: set-membership parameter estimation from sampled
//!   state measurements, including aperiodic measurement gaps,
//! * [`mpc`]: scenario-based min-max model predictive control with a
//!   dual-mode input parameterization,
//! * [`scheduler`]: the self-triggering rule that picks how many inputs
//!   to apply before the next solve,
//! * [`sim`]: a closed-loop harness with a nonlinear cart benchmark,
//!   deterministic trace export and replay tools.

pub mod error;
pub mod estimator;
pub mod mpc;
pub mod scheduler;
pub mod set;
pub mod sim;
pub mod uncertainty;

pub use error::{Error, Result};
