//! Set-membership estimation at triggering instants.
//!
//! The parameter is indexed by the instant it acts on: the step that
//! arrives at time `t+1` is driven by `v_{t+1}`. A strip built from two
//! consecutive measured states therefore pins the parameter value that
//! is current at the later state, which is exactly what the controller
//! needs. The update propagates the parameter set through the drift
//! dynamics once per elapsed step and intersects the result with the
//! measurement strip, so the true current parameter is never lost.
//!
//! Between two triggers the state is only measured at the endpoints, so
//! the update also carries a guaranteed reach tube for the unmeasured
//! intermediate states; the endpoint strip is then widened by a bound
//! on the residual's variation over the last tube element.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::mpc::plant::PlantModel;
use crate::set::{zonotope_inclusion, Strip, ZonoIntersection, Zonotope};
use crate::uncertainty::{propagate_efss, prune_redundant, Efss, UncertaintyModel};

/// Guaranteed state enclosures across one inter-trigger window, one per
/// time index from the previous trigger (a singleton, the measured
/// state) up to the instant before the current trigger.
#[derive(Clone, Debug)]
pub struct ReachTube {
    pub sets: Vec<Zonotope>,
}

impl ReachTube {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn contains(&self, offset: usize, x: &DVector<f64>, tol: f64) -> bool {
        offset < self.sets.len() && self.sets[offset].contains_point(x, tol)
    }
}

/// Updated parameter set, the tube that justified it, and whether the
/// measurement had to be discarded to keep the set nonempty.
#[derive(Clone, Debug)]
pub struct EfssUpdate {
    pub efss: Efss,
    pub tube: ReachTube,
    pub fault: bool,
}

/// Information set from two consecutive measured states: the parameter
/// values whose one-step residual stays inside the disturbance bound.
/// Contains the parameter that drove the step into `x_now`.
pub fn information_set_consecutive(
    x_prev: &DVector<f64>,
    x_now: &DVector<f64>,
    u_prev: &DVector<f64>,
    plant: &PlantModel,
) -> Result<Strip> {
    let phi = plant.g(x_prev, u_prev);
    let y = x_now - plant.f(x_prev, u_prev);
    Strip::new(phi, y, plant.d_set.interval_hull())
}

/// Sound one-step image of a state set: the affine parameter and
/// disturbance terms evaluated at the set center, plus an interval
/// Jacobian bound on the variation across the set. `efss` must hold the
/// parameter that drives this step, i.e. the set already propagated to
/// the arrival instant.
pub fn reachable_step(
    x_set: &Zonotope,
    u: &DVector<f64>,
    efss: &Efss,
    plant: &PlantModel,
    d_set: &Zonotope,
) -> Result<Zonotope> {
    let p = x_set.center();
    let v_hull = efss.set.hull_intersection()?;
    let gv = Zonotope::from_interval_box(&v_hull).linear_map(&plant.g(p, u))?;
    let mut out = Zonotope::singleton(plant.f(p, u))
        .minkowski_sum(&gv)?
        .minkowski_sum(d_set)?;
    if x_set.order() > 0 {
        let jac = plant.jac_x_total(&x_set.interval_hull(), u, &v_hull)?;
        let jg = jac.mul_matrix(x_set.generators())?;
        let spread = Zonotope::new(DVector::zeros(plant.n_x), zonotope_inclusion(&jg))?;
        out = out.minkowski_sum(&spread)?;
    }
    Ok(out)
}

/// Information set when the pre-measurement state is only known to lie
/// in a set: the strip at the set center, with its bound widened by an
/// interval enclosure of the residual's variation over the set (for
/// every admissible parameter). Collapses to the consecutive strip for
/// a singleton.
pub fn information_set_aperiodic(
    tube_last: &Zonotope,
    x_now: &DVector<f64>,
    u_prev: &DVector<f64>,
    plant: &PlantModel,
) -> Result<Strip> {
    let p = tube_last.center();
    let phi = plant.g(p, u_prev);
    let y = x_now - plant.f(p, u_prev);
    let mut bound = plant.d_set.interval_hull();
    if tube_last.order() > 0 {
        let v_hull = plant.v_prior.interval_hull();
        let jac = plant.jac_x_total(&tube_last.interval_hull(), u_prev, &v_hull)?;
        let jg = jac.mul_matrix(tube_last.generators())?;
        let variation = Zonotope::new(DVector::zeros(plant.n_x), zonotope_inclusion(&jg))?
            .interval_hull();
        bound = bound.sum(&variation)?;
    }
    Strip::new(phi, y, bound)
}

/// Full estimation step across one inter-trigger window: rebuild the
/// reach tube from the logged inputs, propagate the parameter set once
/// per elapsed step, and refine every propagated member with the
/// endpoint measurement strip. The unrefined members are kept alongside
/// the refined ones so the represented intersection never grows, and
/// the prior is re-attached last. An empty intersection means the
/// measurement contradicts the model; the update then falls back to
/// propagation without the strip and flags the fault instead of going
/// empty.
pub fn update_efss(
    e_prev: &Efss,
    x_prev: &DVector<f64>,
    x_now: &DVector<f64>,
    inputs: &[DVector<f64>],
    model: &UncertaintyModel,
    plant: &PlantModel,
) -> Result<EfssUpdate> {
    let gap = inputs.len();
    if gap == 0 {
        return Err(Error::InvalidConfig(
            "estimation window needs at least one input".into(),
        ));
    }

    let mut tube = vec![Zonotope::singleton(x_prev.clone())];
    let mut e = e_prev.clone();
    for j in 0..gap - 1 {
        e = propagate_efss(&e, model)?;
        let next = reachable_step(&tube[j], &inputs[j], &e, plant, &plant.d_set)?;
        tube.push(next);
    }

    let strip = if gap == 1 {
        information_set_consecutive(x_prev, x_now, &inputs[0], plant)?
    } else {
        information_set_aperiodic(&tube[gap - 1], x_now, &inputs[gap - 1], plant)?
    };

    let propagated = propagate_efss(&e, model)?;
    let with_strip: Result<ZonoIntersection> = (|| {
        let mut members = Vec::with_capacity(2 * propagated.set.members().len());
        for m in propagated.set.members() {
            let (refined, _) = m.intersect_strip(&strip)?;
            members.push(refined);
            members.push(m.clone());
        }
        prune_redundant(&mut members);
        let set = ZonoIntersection::new(members)?;
        set.hull_intersection()?;
        Ok(set)
    })();

    let (set, fault) = match with_strip {
        Ok(set) => (set, false),
        Err(Error::EmptyIntersection) => (propagated.set, true),
        Err(err) => return Err(err),
    };
    Ok(EfssUpdate {
        efss: Efss {
            set,
            timestamp: e_prev.timestamp + gap as u64,
        },
        tube: ReachTube { sets: tube },
        fault,
    })
}
