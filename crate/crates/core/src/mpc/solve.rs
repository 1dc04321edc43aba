//! Worst-case evaluation over a scenario tree and the min-max solve:
//! multi-start compass search over the open-loop inputs and the
//! closed-loop policy parameters.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mpc::cost::{trajectory_cost, CostWeights};
use crate::mpc::plant::PlantModel;
use crate::mpc::terminal::TerminalIngredients;
use crate::mpc::tree::{build_scenario_tree, LeafRealization, ScenarioTree};
use crate::uncertainty::{predicted_efss_sequence, Efss, UncertaintyModel};

/// Constraint slack below which a trajectory counts as infeasible.
pub const CONSTRAINT_TOL: f64 = 1e-6;

/// Per-stage closed-loop policy `u(x) = a kappa_f(x) + (b x'x + c) 1`,
/// clamped onto the input box; one gain triple per stage past the
/// open-loop horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub gains: Vec<[f64; 3]>,
}

impl PolicyParams {
    /// Pure terminal feedback: `(a, b, c) = (1, 0, 0)` at every stage.
    pub fn terminal_feedback(len: usize) -> Self {
        PolicyParams {
            gains: vec![[1.0, 0.0, 0.0]; len],
        }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

fn policy_input(
    gain: &[f64; 3],
    x: &DVector<f64>,
    plant: &PlantModel,
    term: &TerminalIngredients,
) -> DVector<f64> {
    let quad = gain[1] * x.dot(x) + gain[2];
    let u = term.kappa(x) * gain[0] + DVector::from_element(plant.n_u, quad);
    plant.clamp_input(&u)
}

/// Signed worst-case slacks of the three constraint groups; nonnegative
/// means satisfied.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintMargins {
    pub state: f64,
    pub input: f64,
    pub terminal: f64,
}

impl ConstraintMargins {
    pub fn min(&self) -> f64 {
        self.state.min(self.input).min(self.terminal)
    }

    pub fn feasible(&self) -> bool {
        self.min() >= -CONSTRAINT_TOL
    }

    /// Total constraint violation beyond the feasibility tolerance.
    pub fn violation(&self) -> f64 {
        let part = |m: f64| (-(m + CONSTRAINT_TOL)).max(0.0);
        part(self.state) + part(self.input) + part(self.terminal)
    }

    fn merge(&mut self, other: &ConstraintMargins) {
        self.state = self.state.min(other.state);
        self.input = self.input.min(other.input);
        self.terminal = self.terminal.min(other.terminal);
    }
}

/// Outcome of evaluating fixed decisions against every leaf.
#[derive(Clone, Debug)]
pub struct WorstCase {
    pub value: f64,
    pub feasible: bool,
    pub margins: ConstraintMargins,
    pub worst_leaf: usize,
}

#[derive(Clone, Debug)]
pub struct MpcSolution {
    pub value: f64,
    pub open_inputs: Vec<DVector<f64>>,
    pub policies: PolicyParams,
    pub feasible: bool,
    pub worst_leaf: usize,
    pub margins: ConstraintMargins,
    /// Open-loop horizon this solution was computed for.
    pub h: usize,
    /// Full prediction horizon.
    pub horizon: usize,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Multi-start count, warm starts included.
    pub starts: usize,
    /// Cap on compass-search sweeps per start.
    pub max_iters: usize,
    /// Step size below which a start counts as converged.
    pub tol: f64,
    /// Scenario-tree branching depth.
    pub branch_depth: usize,
    /// Hard cap on scenario-tree leaves.
    pub max_leaves: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 8,
            max_iters: 2000,
            tol: 1e-6,
            branch_depth: 2,
            max_leaves: crate::mpc::tree::MAX_LEAVES,
            seed: 0,
        }
    }
}

/// Simulates one leaf: open-loop inputs for stages `0..h`, the policy
/// for the rest. Returns the state path (length n+1) and input path
/// (length n).
pub fn rollout(
    x0: &DVector<f64>,
    open_inputs: &[DVector<f64>],
    policies: &PolicyParams,
    leaf: &LeafRealization,
    plant: &PlantModel,
    term: &TerminalIngredients,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let n = leaf.v_seq.len();
    let h = open_inputs.len();
    debug_assert_eq!(policies.len(), n - h);
    let mut x_path = Vec::with_capacity(n + 1);
    let mut u_path = Vec::with_capacity(n);
    x_path.push(x0.clone());
    for l in 0..n {
        let u = if l < h {
            open_inputs[l].clone()
        } else {
            policy_input(&policies.gains[l - h], &x_path[l], plant, term)
        };
        let next = plant.step(&x_path[l], &u, &leaf.v_seq[l], &leaf.d_seq[l]);
        u_path.push(u);
        x_path.push(next);
    }
    (x_path, u_path)
}

fn box_margin(b: &crate::set::IntervalBox, x: &DVector<f64>) -> f64 {
    let mut m = f64::INFINITY;
    for j in 0..b.dim() {
        m = m.min(b.upper()[j] - x[j]).min(x[j] - b.lower()[j]);
    }
    m
}

/// Max over leaves of the penalized trajectory cost, with the worst
/// constraint slacks across all leaves. Ties on the worst value go to
/// the lowest leaf id. Non-finite states anywhere fail the evaluation.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_worst_case(
    x0: &DVector<f64>,
    open_inputs: &[DVector<f64>],
    policies: &PolicyParams,
    tree: &ScenarioTree,
    plant: &PlantModel,
    beta: f64,
    weights: &CostWeights,
    term: &TerminalIngredients,
) -> Result<WorstCase> {
    let h = open_inputs.len();
    let n = tree.horizon();
    let mut value = f64::NEG_INFINITY;
    let mut worst_leaf = 0usize;
    let mut margins = ConstraintMargins {
        state: f64::INFINITY,
        input: f64::INFINITY,
        terminal: f64::INFINITY,
    };
    for (id, leaf) in tree.leaves().iter().enumerate() {
        let (x_path, u_path) = rollout(x0, open_inputs, policies, leaf, plant, term);
        if x_path.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("scenario rollout"));
        }
        let mut leaf_margins = ConstraintMargins {
            state: f64::INFINITY,
            input: f64::INFINITY,
            terminal: term.margin(&x_path[n]),
        };
        for (l, x) in x_path.iter().enumerate().take(n) {
            leaf_margins.state = leaf_margins.state.min(box_margin(&plant.state_bounds, x));
            leaf_margins.input = leaf_margins
                .input
                .min(box_margin(&plant.input_bounds, &u_path[l]));
        }
        margins.merge(&leaf_margins);
        let cost = trajectory_cost(&x_path, &u_path, h, beta, weights, term)?;
        if cost > value {
            value = cost;
            worst_leaf = id;
        }
    }
    Ok(WorstCase {
        value,
        feasible: margins.feasible(),
        margins,
        worst_leaf,
    })
}

/// Decision layout: `h` stacked input vectors, then one (a, b, c)
/// triple per closed-loop stage, all box constrained.
struct DecisionSpace {
    h: usize,
    n: usize,
    n_u: usize,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

/// Search box for the policy feedback coefficients a and b; the offset
/// c is bounded by the input range (a larger offset is clamped away).
const GAIN_BOX: f64 = 10.0;

impl DecisionSpace {
    fn new(plant: &PlantModel, h: usize, n: usize) -> Self {
        let n_u = plant.n_u;
        let dim = h * n_u + 3 * (n - h);
        let mut lower = DVector::zeros(dim);
        let mut upper = DVector::zeros(dim);
        for l in 0..h {
            for j in 0..n_u {
                lower[l * n_u + j] = plant.input_bounds.lower()[j];
                upper[l * n_u + j] = plant.input_bounds.upper()[j];
            }
        }
        let c_lo = plant.input_bounds.lower().min();
        let c_hi = plant.input_bounds.upper().max();
        for i in 0..(n - h) {
            let base = h * n_u + 3 * i;
            lower[base] = -GAIN_BOX;
            upper[base] = GAIN_BOX;
            lower[base + 1] = -GAIN_BOX;
            upper[base + 1] = GAIN_BOX;
            lower[base + 2] = c_lo;
            upper[base + 2] = c_hi;
        }
        DecisionSpace {
            h,
            n,
            n_u,
            lower,
            upper,
        }
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn pack(&self, open: &[DVector<f64>], policies: &PolicyParams) -> DVector<f64> {
        let mut z = DVector::zeros(self.dim());
        for (l, u) in open.iter().enumerate().take(self.h) {
            for j in 0..self.n_u {
                z[l * self.n_u + j] = u[j];
            }
        }
        for (i, g) in policies.gains.iter().enumerate().take(self.n - self.h) {
            let base = self.h * self.n_u + 3 * i;
            z[base] = g[0];
            z[base + 1] = g[1];
            z[base + 2] = g[2];
        }
        self.clamp(&z)
    }

    fn unpack(&self, z: &DVector<f64>) -> (Vec<DVector<f64>>, PolicyParams) {
        let open = (0..self.h)
            .map(|l| DVector::from_fn(self.n_u, |j, _| z[l * self.n_u + j]))
            .collect();
        let gains = (0..self.n - self.h)
            .map(|i| {
                let base = self.h * self.n_u + 3 * i;
                [z[base], z[base + 1], z[base + 2]]
            })
            .collect();
        (open, PolicyParams { gains })
    }

    fn clamp(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| z[i].clamp(self.lower[i], self.upper[i]))
    }
}

/// Greedy compass search with step halving: probe +/- step along every
/// coordinate, move to the best improving probe, halve all steps when
/// none improves, stop when steps fall below `tol` or the sweep budget
/// runs out.
fn compass_search<F: Fn(&DVector<f64>) -> f64>(
    f: &F,
    start: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> (DVector<f64>, f64) {
    let dim = start.len();
    let mut best = start.clone();
    let mut fbest = f(&best);
    if dim == 0 {
        return (best, fbest);
    }
    let mut steps: Vec<f64> = (0..dim)
        .map(|i| {
            let w = upper[i] - lower[i];
            if w.is_finite() && w > 0.0 {
                0.25 * w
            } else {
                1.0
            }
        })
        .collect();
    for _ in 0..max_iters {
        let mut cand_best: Option<(f64, usize, f64)> = None;
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let xi = (best[i] + sign * steps[i]).clamp(lower[i], upper[i]);
                if xi == best[i] {
                    continue;
                }
                let mut cand = best.clone();
                cand[i] = xi;
                let fc = f(&cand);
                if fc < fbest - 1e-15
                    && cand_best.map_or(true, |(fb, _, _)| fc < fb)
                {
                    cand_best = Some((fc, i, xi));
                }
            }
        }
        match cand_best {
            Some((fc, i, xi)) => {
                best[i] = xi;
                fbest = fc;
            }
            None => {
                for s in steps.iter_mut() {
                    *s *= 0.5;
                }
                if steps.iter().all(|s| *s < tol) {
                    break;
                }
            }
        }
    }
    (best, fbest)
}

/// Maps a previous solution onto a new decision layout: open inputs and
/// policy gains shift left by `skip` executed stages, with `fill_input`
/// and the last known gain padding the uncovered tail. Used both for
/// growing the open-loop horizon within one trigger and for carrying a
/// solution across triggers.
pub fn warm_from(
    prev: &MpcSolution,
    skip: usize,
    h_new: usize,
    n: usize,
    fill_input: &DVector<f64>,
) -> (Vec<DVector<f64>>, PolicyParams) {
    let mut open = Vec::with_capacity(h_new);
    for l in 0..h_new {
        let abs = l + skip;
        open.push(if abs < prev.open_inputs.len() {
            prev.open_inputs[abs].clone()
        } else {
            fill_input.clone()
        });
    }
    let fallback = prev.policies.gains.last().copied().unwrap_or([1.0, 0.0, 0.0]);
    let mut gains = Vec::with_capacity(n - h_new);
    for i in h_new..n {
        let abs = i + skip;
        gains.push(if abs >= prev.h && abs < prev.horizon {
            prev.policies.gains[abs - prev.h]
        } else {
            fallback
        });
    }
    (open, PolicyParams { gains })
}

fn merit(wc: &WorstCase) -> f64 {
    let viol = wc.margins.violation();
    let mut m = wc.value + 1e6 * viol;
    // Fixed offset keeps an already-feasible iterate from trading
    // feasibility for value.
    if viol > 0.0 {
        m += 1e3;
    }
    if m.is_finite() {
        m
    } else {
        f64::INFINITY
    }
}

/// Minimizes the worst-case penalized cost over open-loop inputs and
/// policy parameters by multi-start compass search. Starts: nominal
/// zero inputs, a terminal-feedback rollout, any supplied warm starts,
/// and seeded random points up to `cfg.starts`. Deterministic for a
/// fixed seed; starts run in parallel and are reduced by feasibility
/// first, then merit, then start index.
#[allow(clippy::too_many_arguments)]
pub fn solve_minmax(
    x0: &DVector<f64>,
    efss: &Efss,
    model: &UncertaintyModel,
    beta: f64,
    h: usize,
    n: usize,
    plant: &PlantModel,
    weights: &CostWeights,
    term: &TerminalIngredients,
    cfg: &SearchConfig,
    warm_starts: &[(Vec<DVector<f64>>, PolicyParams)],
) -> Result<MpcSolution> {
    if h == 0 || h > n {
        return Err(Error::BadHorizonSplit { h, n });
    }
    if beta < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "penalty must be at least 1, got {beta}"
        )));
    }
    // Stage l of the tree covers the step arriving at instant l + 1,
    // so the predicted sets are consumed shifted by one.
    let efss_seq = predicted_efss_sequence(efss, model, n)?;
    let tree =
        build_scenario_tree(&efss_seq[1..], &plant.d_set, n, cfg.branch_depth, cfg.max_leaves)?;
    let space = DecisionSpace::new(plant, h, n);

    // Nominal center realizations for the terminal-feedback seed.
    let v_centers: Vec<DVector<f64>> = efss_seq[1..]
        .iter()
        .map(|e| Ok(e.set.hull_intersection()?.center()))
        .collect::<Result<_>>()?;
    let d_center = plant.d_set.interval_hull().center();
    let kappa_seed = {
        let mut x = x0.clone();
        let mut open = Vec::with_capacity(h);
        for v in v_centers.iter().take(h) {
            let u = plant.clamp_input(&term.kappa(&x));
            x = plant.step(&x, &u, v, &d_center);
            open.push(u);
        }
        (open, PolicyParams::terminal_feedback(n - h))
    };

    let zero_inputs = vec![DVector::zeros(plant.n_u); h];
    let mut seeds: Vec<DVector<f64>> = Vec::new();
    seeds.push(space.pack(&zero_inputs, &PolicyParams::terminal_feedback(n - h)));
    seeds.push(space.pack(&kappa_seed.0, &kappa_seed.1));
    for (open, pols) in warm_starts {
        seeds.push(space.pack(open, pols));
    }
    let mut k = 0u64;
    while seeds.len() < cfg.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (k + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let z = DVector::from_fn(space.dim(), |i, _| {
            rng.gen_range(space.lower[i]..=space.upper[i])
        });
        seeds.push(z);
        k += 1;
    }

    let objective = |z: &DVector<f64>| -> f64 {
        let (open, pols) = space.unpack(z);
        match evaluate_worst_case(x0, &open, &pols, &tree, plant, beta, weights, term) {
            Ok(wc) => merit(&wc),
            Err(_) => f64::INFINITY,
        }
    };

    let best = seeds
        .par_iter()
        .enumerate()
        .map(|(idx, z0)| {
            let (z, m) = compass_search(
                &objective,
                z0,
                &space.lower,
                &space.upper,
                cfg.max_iters,
                cfg.tol,
            );
            (m, idx, z)
        })
        .reduce_with(|a, b| {
            // Feasibility first (violation offset pushes merit past 1e3),
            // then merit, then lowest start index.
            let key = |t: &(f64, usize, DVector<f64>)| (t.0, t.1);
            if key(&b) < key(&a) {
                b
            } else {
                a
            }
        })
        .expect("at least one start");

    let (open, pols) = space.unpack(&best.2);
    let wc = evaluate_worst_case(x0, &open, &pols, &tree, plant, beta, weights, term)?;
    Ok(MpcSolution {
        value: wc.value,
        open_inputs: open,
        policies: pols,
        feasible: wc.feasible,
        worst_leaf: wc.worst_leaf,
        margins: wc.margins,
        h,
        horizon: n,
    })
}
