//! Scenario trees for worst-case evaluation: branch over the corner
//! realizations of the parameter and disturbance hulls for the first
//! few stages, then hold each branch's last corner pattern for the rest
//! of the horizon.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::set::{IntervalBox, Zonotope};
use crate::uncertainty::Efss;

/// Default cap on the number of leaves a tree may expand to.
pub const MAX_LEAVES: usize = 4096;

/// One uncertainty realization over the full horizon.
#[derive(Clone, Debug)]
pub struct LeafRealization {
    pub v_seq: Vec<DVector<f64>>,
    pub d_seq: Vec<DVector<f64>>,
}

#[derive(Clone, Debug)]
pub struct ScenarioTree {
    leaves: Vec<LeafRealization>,
    horizon: usize,
}

impl ScenarioTree {
    pub fn leaves(&self) -> &[LeafRealization] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Sign patterns over the axes flagged active; inactive axes stay at 0
/// (the hull center) so degenerate directions do not multiply leaves.
fn sign_patterns(active: &[bool]) -> Vec<Vec<f64>> {
    let idx: Vec<usize> = (0..active.len()).filter(|&j| active[j]).collect();
    let count = 1usize << idx.len();
    let mut out = Vec::with_capacity(count);
    for mask in 0..count {
        let mut pat = vec![0.0; active.len()];
        for (bit, &j) in idx.iter().enumerate() {
            pat[j] = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
        }
        out.push(pat);
    }
    out
}

fn realize(hull: &IntervalBox, pat: &[f64]) -> DVector<f64> {
    let mid = hull.center();
    let rad = hull.radius();
    DVector::from_fn(hull.dim(), |j, _| mid[j] + pat[j] * rad[j])
}

/// Builds the tree for horizon `n` from the predicted parameter sets
/// (one per stage, so `efss_seq` needs at least `n` elements) and the
/// disturbance set. Branch depth `b` picks fresh corner patterns for
/// stages `0..b`; from stage `b` on, each branch freezes the pattern it
/// chose at stage `b-1`. `b = 0` yields the single center scenario.
pub fn build_scenario_tree(
    efss_seq: &[Efss],
    d_set: &Zonotope,
    n: usize,
    b: usize,
    max_leaves: usize,
) -> Result<ScenarioTree> {
    if n == 0 {
        return Err(Error::InvalidConfig("scenario horizon must be positive".into()));
    }
    if b > n {
        return Err(Error::InvalidConfig(format!(
            "branch depth {b} exceeds horizon {n}"
        )));
    }
    if efss_seq.len() < n {
        return Err(Error::DimensionMismatch {
            context: "build_scenario_tree parameter sequence",
            expected: n,
            got: efss_seq.len(),
        });
    }
    let v_hulls: Vec<IntervalBox> = efss_seq[..n]
        .iter()
        .map(|e| e.set.hull_intersection())
        .collect::<Result<_>>()?;
    let d_hull = d_set.interval_hull();
    let n_v = v_hulls[0].dim();
    let n_d = d_hull.dim();

    let v_active: Vec<bool> = (0..n_v)
        .map(|j| v_hulls.iter().any(|h| h.radius()[j] > 1e-12))
        .collect();
    let d_active: Vec<bool> = (0..n_d).map(|j| d_hull.radius()[j] > 1e-12).collect();
    let v_pats = sign_patterns(&v_active);
    let d_pats = sign_patterns(&d_active);
    let combos = v_pats.len() * d_pats.len();

    let leaf_count = (combos as u128).checked_pow(b as u32).unwrap_or(u128::MAX);
    if leaf_count > max_leaves as u128 {
        return Err(Error::TooManyLeaves {
            leaves: leaf_count.min(usize::MAX as u128) as usize,
            cap: max_leaves,
        });
    }
    let leaf_count = leaf_count as usize;

    let zero_v = vec![0.0; n_v];
    let zero_d = vec![0.0; n_d];
    let mut leaves = Vec::with_capacity(leaf_count);
    for id in 0..leaf_count {
        // Base-`combos` digits of the leaf id, most significant digit
        // first, pick the per-stage pattern for stages 0..b.
        let mut stage_combo = vec![0usize; b];
        let mut rem = id;
        for l in (0..b).rev() {
            stage_combo[l] = rem % combos;
            rem /= combos;
        }
        let mut v_seq = Vec::with_capacity(n);
        let mut d_seq = Vec::with_capacity(n);
        for l in 0..n {
            let (vp, dp) = if b == 0 {
                (&zero_v, &zero_d)
            } else {
                let c = stage_combo[l.min(b - 1)];
                (&v_pats[c / d_pats.len()], &d_pats[c % d_pats.len()])
            };
            v_seq.push(realize(&v_hulls[l], vp));
            d_seq.push(realize(&d_hull, dp));
        }
        leaves.push(LeafRealization { v_seq, d_seq });
    }
    Ok(ScenarioTree { leaves, horizon: n })
}
