//! Self-triggered scheduling: pick how many steps of the current plan
//! to execute before the next measurement and solve.
//!
//! The idea is to commit to a longer open-loop prefix only when doing
//! so costs nothing in guaranteed performance. The solver runs once per
//! candidate prefix length, each run warm-started from the previous
//! one, and the chosen length is the largest whose worst-case value
//! does not exceed the one-step value.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::mpc::{
    solve_minmax, warm_from, CostWeights, MpcSolution, PlantModel, SearchConfig,
    TerminalIngredients,
};
use crate::uncertainty::{Efss, UncertaintyModel};

/// Slack allowed when comparing a candidate's worst-case value against
/// the one-step value.
pub const VALUE_TOL: f64 = 1e-9;

/// Trigger rule parameters: the largest admissible prefix length, the
/// penalty schedule base and cap, and the reference uncertainty
/// diameter at which the base penalty applies.
#[derive(Clone, Debug)]
pub struct TriggerConfig {
    pub h_max: usize,
    pub beta0: f64,
    pub beta_max: f64,
    pub xi0: f64,
}

impl TriggerConfig {
    pub fn new(h_max: usize, beta0: f64, beta_max: f64, xi0: f64) -> Result<Self> {
        if h_max == 0 {
            return Err(Error::InvalidConfig("h_max must be at least 1".into()));
        }
        if !(beta0 >= 1.0 && beta0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "base penalty must be at least 1, got {beta0}"
            )));
        }
        if !(beta_max >= beta0 && beta_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "penalty cap {beta_max} must be at least the base {beta0}"
            )));
        }
        if !(xi0 > 0.0 && xi0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "reference diameter must be positive, got {xi0}"
            )));
        }
        Ok(TriggerConfig {
            h_max,
            beta0,
            beta_max,
            xi0,
        })
    }
}

/// Penalty for the current uncertainty: scales inversely with the
/// parameter-set diameter and saturates at the cap. A collapsed set
/// gets the cap outright.
pub fn update_beta(efss: &Efss, cfg: &TriggerConfig) -> Result<f64> {
    let xi = efss.set.diameter()?;
    if xi <= 0.0 {
        return Ok(cfg.beta_max);
    }
    Ok((cfg.xi0 / xi * cfg.beta0).min(cfg.beta_max))
}

/// Outcome of one triggering instant: the committed prefix length, the
/// penalty used, and the solver output for every candidate length
/// (index `h - 1` holds the length-`h` solution).
#[derive(Clone, Debug)]
pub struct TriggerDecision {
    pub h_star: usize,
    pub beta: f64,
    pub solutions: Vec<MpcSolution>,
}

impl TriggerDecision {
    /// The solution actually committed to.
    pub fn chosen(&self) -> &MpcSolution {
        &self.solutions[self.h_star - 1]
    }
}

/// Solve the min-max problem for every prefix length up to the cap and
/// pick the largest one that is feasible and no worse than the
/// one-step solution. Infeasibility at length one is a hard error; at
/// longer lengths it merely disqualifies that length.
///
/// `warm` is the solution committed at the previous trigger; its tail
/// past the steps already executed (its own prefix length) seeds every
/// candidate here, alongside the chain of shorter-prefix solutions.
#[allow(clippy::too_many_arguments)]
pub fn compute_trigger(
    x: &DVector<f64>,
    efss: &Efss,
    model: &UncertaintyModel,
    n: usize,
    plant: &PlantModel,
    weights: &CostWeights,
    term: &TerminalIngredients,
    trigger: &TriggerConfig,
    search: &SearchConfig,
    warm: Option<&MpcSolution>,
) -> Result<TriggerDecision> {
    if trigger.h_max > n {
        return Err(Error::InvalidConfig(format!(
            "h_max {} exceeds the horizon {n}",
            trigger.h_max
        )));
    }
    let beta = update_beta(efss, trigger)?;
    let fill = plant.clamp_input(&term.kappa(x));

    let mut solutions: Vec<MpcSolution> = Vec::with_capacity(trigger.h_max);
    for h in 1..=trigger.h_max {
        let mut warm_starts = Vec::new();
        if let Some(prev) = solutions.last() {
            warm_starts.push(warm_from(prev, 0, h, n, &fill));
        }
        if let Some(prev) = warm {
            warm_starts.push(warm_from(prev, prev.h, h, n, &fill));
        }
        let mut cfg = search.clone();
        cfg.seed = search.seed ^ ((h as u64) << 48);
        let sol = solve_minmax(
            x,
            efss,
            model,
            beta,
            h,
            n,
            plant,
            weights,
            term,
            &cfg,
            &warm_starts,
        )?;
        if h == 1 && !sol.feasible {
            return Err(Error::Infeasible(format!(
                "no feasible one-step plan from the current state \
                 (worst margin {:.3e})",
                sol.margins.min()
            )));
        }
        solutions.push(sol);
    }

    let v1 = solutions[0].value;
    let h_star = (1..=trigger.h_max)
        .filter(|&h| {
            let s = &solutions[h - 1];
            s.feasible && s.value <= v1 + VALUE_TOL
        })
        .max()
        .expect("length one is feasible");

    Ok(TriggerDecision {
        h_star,
        beta,
        solutions,
    })
}
