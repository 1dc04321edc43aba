//! Time-varying bounded parameter sets and their guaranteed propagation.
//!
//! The plant's unknown parameter `v` lives in a known prior `V` and moves
//! one step at a time through a known transition `v+ = eta(v, delta)`
//! with `delta` confined to a compact set `M`. Everything known about `v`
//! at a given time is kept as a [`ZonoIntersection`] (the estimated
//! feasible set); propagating it one step applies the centered inclusion
//! of `eta` to every member and re-attaches the prior, so the result is
//! again a guaranteed outer bound.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::Result;
use crate::set::{centered_inclusion, InclusionFn, IntervalBox, IntervalMatrix, Zonotope, ZonoIntersection};

/// Transition model for the unknown parameter: the map `eta`, the
/// increment set `M` and the standing prior `V`.
#[derive(Clone)]
pub struct UncertaintyModel {
    pub eta: Arc<InclusionFn>,
    pub m_set: Zonotope,
    pub prior: Zonotope,
}

impl UncertaintyModel {
    pub fn new(eta: InclusionFn, m_set: Zonotope, prior: Zonotope) -> Self {
        UncertaintyModel {
            eta: Arc::new(eta),
            m_set,
            prior,
        }
    }

    /// Drift model `v+ = v + delta`, `|delta| <= rate` per axis, with a
    /// symmetric prior `|v_i| <= prior_radius_i`.
    pub fn bounded_drift(prior_radius: DVector<f64>, rate: DVector<f64>) -> Result<Self> {
        let dim = prior_radius.len();
        let prior = Zonotope::from_interval_box(&IntervalBox::symmetric(prior_radius)?);
        let m_set = Zonotope::from_interval_box(&IntervalBox::symmetric(rate)?);
        Ok(UncertaintyModel::new(
            InclusionFn::additive_drift(dim),
            m_set,
            prior,
        ))
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    /// One-step image of a single member.
    pub fn propagate_member(&self, z: &Zonotope) -> Result<Zonotope> {
        centered_inclusion(&self.eta, z, &self.m_set)
    }

    /// Interval matrix bounding `d eta / d v` over a box (exposed for the
    /// estimator's reach-tube computation).
    pub fn jacobian_over(&self, domain: &IntervalBox) -> IntervalMatrix {
        (self.eta.jacobian)(domain, &self.m_set)
    }
}

impl std::fmt::Debug for UncertaintyModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UncertaintyModel")
            .field("dim", &self.dim())
            .field("m_set", &self.m_set)
            .field("prior", &self.prior)
            .finish()
    }
}

/// Estimated feasible set of the parameter at a given time index.
#[derive(Debug, Clone)]
pub struct Efss {
    pub set: ZonoIntersection,
    pub timestamp: u64,
}

impl Efss {
    /// Initial feasible set: the prior alone.
    pub fn initial(model: &UncertaintyModel) -> Self {
        Efss {
            set: ZonoIntersection::from_single(model.prior.clone()),
            timestamp: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }
}

/// One propagation step without measurements: every member moves through
/// the centered inclusion of `eta`, the prior is re-attached as the final
/// member, and the timestamp advances.
pub fn propagate_efss(e: &Efss, model: &UncertaintyModel) -> Result<Efss> {
    let mut members = Vec::with_capacity(e.set.members().len() + 1);
    for m in e.set.members() {
        members.push(model.propagate_member(m)?);
    }
    members.push(model.prior.clone());
    prune_redundant(&mut members);
    Ok(Efss {
        set: ZonoIntersection::new(members)?,
        timestamp: e.timestamp + 1,
    })
}

/// Feasible-set forecast `steps` ahead: element `l` bounds the parameter
/// `l` steps past `e`. Element 0 is `e` itself.
pub fn predicted_efss_sequence(e: &Efss, model: &UncertaintyModel, steps: usize) -> Result<Vec<Efss>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(e.clone());
    for _ in 0..steps {
        let next = propagate_efss(out.last().unwrap(), model)?;
        out.push(next);
    }
    Ok(out)
}

/// Drops members whose interval hull contains another member's hull; in
/// an intersection those add nothing in hull terms, and removing members
/// only enlarges the represented set. Keeps the final (prior) member.
pub(crate) fn prune_redundant(members: &mut Vec<Zonotope>) {
    if members.len() < 2 {
        return;
    }
    let hulls: Vec<IntervalBox> = members.iter().map(|m| m.interval_hull()).collect();
    let covers = |outer: &IntervalBox, inner: &IntervalBox| -> bool {
        (0..outer.dim()).all(|i| {
            outer.lower()[i] <= inner.lower()[i] + 1e-12
                && outer.upper()[i] >= inner.upper()[i] - 1e-12
        })
    };
    let n = members.len();
    let mut keep = vec![true; n];
    for i in 0..n - 1 {
        if !keep[i] {
            continue;
        }
        for j in 0..n {
            if i == j || !keep[j] {
                continue;
            }
            if covers(&hulls[i], &hulls[j]) && (j == n - 1 || !covers(&hulls[j], &hulls[i]) || j < i) {
                keep[i] = false;
                break;
            }
        }
    }
    let mut idx = 0;
    members.retain(|_| {
        let k = keep[idx];
        idx += 1;
        k
    });
}
