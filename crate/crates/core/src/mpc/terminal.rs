//! Terminal ingredients: quadratic terminal cost, ellipsoidal terminal
//! set, linear terminal feedback, and a sampling-based audit of the
//! standing assumptions behind them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mpc::cost::CostWeights;
use crate::mpc::plant::PlantModel;

/// Terminal cost `x' P x`, terminal set `{x : x' P x <= level}`, and
/// terminal feedback `kappa_f(x) = K x`.
#[derive(Clone, Debug)]
pub struct TerminalIngredients {
    p: DMatrix<f64>,
    level: f64,
    k_gain: DMatrix<f64>,
    p_inv: DMatrix<f64>,
    /// Inverse transpose of the Cholesky factor of P; maps unit vectors
    /// onto the level-1 ellipsoid surface.
    l_inv_t: DMatrix<f64>,
}

impl TerminalIngredients {
    pub fn new(p: DMatrix<f64>, level: f64, k_gain: DMatrix<f64>) -> Result<Self> {
        if p.nrows() != p.ncols() {
            return Err(Error::InvalidConfig("terminal P must be square".into()));
        }
        if (&p - p.transpose()).amax() > 1e-9 {
            return Err(Error::InvalidConfig("terminal P must be symmetric".into()));
        }
        let chol = p
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidConfig("terminal P must be positive definite".into()))?;
        if !(level > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "terminal level must be positive, got {level}"
            )));
        }
        if k_gain.ncols() != p.nrows() {
            return Err(Error::DimensionMismatch {
                context: "terminal feedback gain",
                expected: p.nrows(),
                got: k_gain.ncols(),
            });
        }
        let p_inv = chol.inverse();
        let l = chol.l();
        let l_inv_t = l
            .try_inverse()
            .ok_or_else(|| Error::InvalidConfig("terminal P is numerically singular".into()))?
            .transpose();
        Ok(TerminalIngredients {
            p,
            level,
            k_gain,
            p_inv,
            l_inv_t,
        })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn k_gain(&self) -> &DMatrix<f64> {
        &self.k_gain
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn terminal_cost(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.p * x)[(0, 0)]
    }

    pub fn kappa(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.k_gain * x
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.terminal_cost(x) <= self.level + tol
    }

    /// Signed slack `level - x' P x` (nonnegative inside the set).
    pub fn margin(&self, x: &DVector<f64>) -> f64 {
        self.level - self.terminal_cost(x)
    }

    /// Exact per-channel bound `max |(K x)_i|` over the terminal set:
    /// the maximum of a linear form over an ellipsoid,
    /// `sqrt(k_i P^{-1} k_i' * level)`.
    pub fn kappa_bound(&self) -> DVector<f64> {
        DVector::from_fn(self.k_gain.nrows(), |i, _| {
            let k = self.k_gain.row(i);
            let q = (k * &self.p_inv * k.transpose())[(0, 0)];
            (q.max(0.0) * self.level).sqrt()
        })
    }

    /// Exact per-axis extent `max |x_j|` over the terminal set.
    pub fn axis_extent(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| (self.p_inv[(j, j)].max(0.0) * self.level).sqrt())
    }

    /// Point on the terminal-set boundary in the direction of `dir`
    /// (in the transformed coordinates where the set is a ball).
    pub fn boundary_point(&self, dir: &DVector<f64>) -> DVector<f64> {
        let norm = dir.norm();
        let unit = if norm > 0.0 {
            dir / norm
        } else {
            DVector::from_fn(self.dim(), |i, _| if i == 0 { 1.0 } else { 0.0 })
        };
        &self.l_inv_t * unit * self.level.sqrt()
    }
}

/// One sampled violation of the terminal decrease condition.
#[derive(Clone, Debug)]
pub struct DecreaseFailure {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub margin: f64,
}

/// Result of the sampling audit of the terminal assumptions.
#[derive(Clone, Debug)]
pub struct TerminalReport {
    pub boundary_samples: usize,
    /// Closed-form per-channel maximum of |kappa_f| over the terminal set.
    pub kappa_bound: DVector<f64>,
    pub kappa_within_input_bounds: bool,
    /// Closed-form per-axis extent of the terminal set.
    pub terminal_extent: DVector<f64>,
    pub terminal_set_within_state_bounds: bool,
    /// Fraction of boundary samples where, with d = 0 and the worst
    /// admissible parameter vertex, the terminal cost drops by at least
    /// the stage cost under the terminal feedback.
    pub decrease_pass_fraction: f64,
    pub decrease_worst_margin: f64,
    /// Up to ten failing samples with coordinates, worst first.
    pub decrease_failures: Vec<DecreaseFailure>,
    /// Smallest slope rho such that rho * ||d|| covers the observed
    /// decrease deficit at every sampled d != 0 realization.
    pub alpha_slope: f64,
    /// Fraction of sampled (x in terminal set, v, d vertices) whose
    /// successor under the terminal feedback stays in the terminal set.
    pub invariance_pass_fraction: f64,
    pub invariance_worst_excess: f64,
}

fn hull_corners_with_center(z: &crate::set::Zonotope) -> Vec<DVector<f64>> {
    let hull = z.interval_hull();
    let mut pts = hull.vertices();
    let center = hull.center();
    if !pts.iter().any(|p| (p - &center).amax() <= 1e-15) {
        pts.push(center);
    }
    pts
}

/// Samples the terminal-set boundary and interior against the plant and
/// reports how well the terminal ingredients hold up: feedback within
/// input bounds, set within state bounds, cost decrease under the
/// terminal feedback at d = 0, the disturbance-gain slope needed to
/// cover the rest, and robust invariance of the set.
///
/// Purely diagnostic: nothing here mutates or gates the controller.
pub fn verify_terminal_assumption(
    plant: &PlantModel,
    term: &TerminalIngredients,
    weights: &CostWeights,
    boundary_samples: usize,
    seed: u64,
) -> Result<TerminalReport> {
    if term.dim() != plant.n_x {
        return Err(Error::DimensionMismatch {
            context: "verify_terminal_assumption",
            expected: plant.n_x,
            got: term.dim(),
        });
    }
    let n = plant.n_x;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Boundary directions: a deterministic angular sweep in 2-D, seeded
    // random directions otherwise.
    let mut boundary = Vec::with_capacity(boundary_samples);
    for i in 0..boundary_samples {
        let dir = if n == 2 {
            let th = 2.0 * std::f64::consts::PI * (i as f64) / (boundary_samples as f64);
            DVector::from_vec(vec![th.cos(), th.sin()])
        } else {
            let mut d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            while d.norm() < 1e-6 {
                d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            }
            d
        };
        boundary.push(term.boundary_point(&dir));
    }

    let v_corners = hull_corners_with_center(&plant.v_prior);
    let d_corners = hull_corners_with_center(&plant.d_set);
    let d_zero = DVector::zeros(n);

    let kappa_bound = term.kappa_bound();
    let kappa_within_input_bounds = (0..kappa_bound.len()).all(|i| {
        kappa_bound[i] <= plant.input_bounds.upper()[i] + 1e-9
            && -kappa_bound[i] >= plant.input_bounds.lower()[i] - 1e-9
    });
    let terminal_extent = term.axis_extent();
    let terminal_set_within_state_bounds = (0..n).all(|j| {
        terminal_extent[j] <= plant.state_bounds.upper()[j] + 1e-9
            && -terminal_extent[j] >= plant.state_bounds.lower()[j] - 1e-9
    });

    let mut pass = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut failures: Vec<DecreaseFailure> = Vec::new();
    let mut alpha_slope: f64 = 0.0;
    for x in &boundary {
        let u = plant.clamp_input(&term.kappa(x));
        let lf_x = term.terminal_cost(x);
        let stage = weights.stage_cost(x, &u);
        // Worst parameter vertex at d = 0 decides pass/fail.
        let mut margin = f64::INFINITY;
        let mut worst_v = v_corners[0].clone();
        for v in &v_corners {
            let xp = plant.step(x, &u, v, &d_zero);
            let m = -(term.terminal_cost(&xp) - lf_x + stage);
            if m < margin {
                margin = m;
                worst_v = v.clone();
            }
        }
        if margin >= -1e-9 {
            pass += 1;
        } else {
            failures.push(DecreaseFailure {
                x: x.clone(),
                v: worst_v,
                margin,
            });
        }
        worst_margin = worst_margin.min(margin);
        // Slope needed so that rho * ||d|| absorbs the deficit at d != 0.
        for v in &v_corners {
            for d in &d_corners {
                let dn = d.norm();
                if dn <= 1e-12 {
                    continue;
                }
                let xp = plant.step(x, &u, v, d);
                let deficit = term.terminal_cost(&xp) - lf_x + stage;
                if deficit > 0.0 {
                    alpha_slope = alpha_slope.max(deficit / dn);
                }
            }
        }
    }
    failures.sort_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap());
    failures.truncate(10);
    let decrease_pass_fraction = if boundary.is_empty() {
        1.0
    } else {
        pass as f64 / boundary.len() as f64
    };

    // Invariance sweep over boundary and interior points.
    let mut inv_total = 0usize;
    let mut inv_pass = 0usize;
    let mut inv_worst: f64 = 0.0;
    for x_b in &boundary {
        for scale in [0.3, 0.7, 1.0] {
            let x = x_b * scale;
            let u = plant.clamp_input(&term.kappa(&x));
            for v in &v_corners {
                for d in &d_corners {
                    let xp = plant.step(&x, &u, v, d);
                    inv_total += 1;
                    let excess = term.terminal_cost(&xp) - term.level();
                    if excess <= 1e-9 {
                        inv_pass += 1;
                    }
                    inv_worst = inv_worst.max(excess);
                }
            }
        }
    }
    let invariance_pass_fraction = if inv_total == 0 {
        1.0
    } else {
        inv_pass as f64 / inv_total as f64
    };

    Ok(TerminalReport {
        boundary_samples: boundary.len(),
        kappa_bound,
        kappa_within_input_bounds,
        terminal_extent,
        terminal_set_within_state_bounds,
        decrease_pass_fraction,
        decrease_worst_margin: worst_margin,
        decrease_failures: failures,
        alpha_slope,
        invariance_pass_fraction,
        invariance_worst_excess: inv_worst,
    })
}
