//! Quadratic stage cost and the penalized finite-horizon objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mpc::terminal::TerminalIngredients;

/// Stage-cost weights `l(x, u) = x' Q x + u' R u`.
#[derive(Clone, Debug)]
pub struct CostWeights {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl CostWeights {
    /// Both matrices must be symmetric positive definite.
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        for (name, m) in [("Q", &q), ("R", &r)] {
            if m.nrows() != m.ncols() {
                return Err(Error::InvalidConfig(format!("{name} must be square")));
            }
            if (m - m.transpose()).amax() > 1e-9 {
                return Err(Error::InvalidConfig(format!("{name} must be symmetric")));
            }
            if m.clone().cholesky().is_none() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive definite"
                )));
            }
        }
        Ok(CostWeights { q, r })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn stage_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (x.transpose() * &self.q * x)[(0, 0)] + (u.transpose() * &self.r * u)[(0, 0)]
    }
}

/// Objective over one predicted trajectory: the first `h` stages are
/// open loop and discounted by `1/beta`, the remaining stages run under
/// the feedback policy at full weight, and the final state pays the
/// terminal cost.
///
/// `x_path` has one more element than `u_path`.
pub fn trajectory_cost(
    x_path: &[DVector<f64>],
    u_path: &[DVector<f64>],
    h: usize,
    beta: f64,
    weights: &CostWeights,
    term: &TerminalIngredients,
) -> Result<f64> {
    let n = u_path.len();
    if x_path.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            context: "trajectory_cost path lengths",
            expected: n + 1,
            got: x_path.len(),
        });
    }
    if h == 0 || h > n {
        return Err(Error::BadHorizonSplit { h, n });
    }
    if beta < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "penalty must be at least 1, got {beta}"
        )));
    }
    let mut total = 0.0;
    for l in 0..n {
        let stage = weights.stage_cost(&x_path[l], &u_path[l]);
        total += if l < h { stage / beta } else { stage };
    }
    Ok(total + term.terminal_cost(&x_path[n]))
}
