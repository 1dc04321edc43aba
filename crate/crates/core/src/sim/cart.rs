//! Cart on a nonlinear spring with a damper whose coefficient is only
//! known up to a drifting multiplicative offset.
//!
//! Discrete dynamics (forward Euler, step `t`):
//!
//! ```text
//! x1+ = x1 + t x2
//! x2+ = -(l t / m) exp(-x1) + (1 - h t / m) x2 + (t / m) u
//!       - (t / m) v x2 + (t / m) d
//! ```
//!
//! `v` is the damping offset, `d` a bounded force disturbance that
//! enters pre-scaled by `t / m`.

use std::sync::Arc;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use crate::error::Result;
use crate::mpc::{CostWeights, PlantModel, TerminalIngredients};
use crate::set::{Interval, IntervalBox, IntervalMatrix, Zonotope};
use crate::uncertainty::UncertaintyModel;

/// Physical constants: mass, spring coefficient, nominal damping, and
/// the sampling period.
#[derive(Clone, Copy, Debug)]
pub struct CartParams {
    pub m: f64,
    pub l: f64,
    pub h: f64,
    pub t: f64,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            m: 1.0,
            l: 0.33,
            h: 1.1,
            t: 0.4,
        }
    }
}

/// Maximum damping offset magnitude.
pub const V_BOUND: f64 = 0.15;
/// Maximum per-step drift of the damping offset.
pub const V_RATE: f64 = 0.008;
/// Maximum raw force disturbance (before the `t / m` scaling).
pub const D_BOUND: f64 = 0.1;
/// Input force bound.
pub const U_BOUND: f64 = 4.5;
/// Position bound.
pub const X1_BOUND: f64 = 2.0;
/// Velocity bound; generous, the benchmark never gets close.
pub const X2_BOUND: f64 = 10.0;

/// One true step with explicit parameter and disturbance realizations.
/// `d` is the raw force, scaled internally.
pub fn cart_step(x: &DVector<f64>, u: f64, v: f64, d: f64, p: &CartParams) -> DVector<f64> {
    let s = p.t / p.m;
    dvector![
        x[0] + p.t * x[1],
        -p.l * s * (-x[0]).exp() + (1.0 - p.h * s) * x[1] + s * u - s * v * x[1] + s * d
    ]
}

/// The cart as a plant model with interval Jacobians. The disturbance
/// set absorbs the `t / m` input scaling, so its radius is
/// `t / m * D_BOUND`.
pub fn cart_plant(p: &CartParams) -> Result<PlantModel> {
    let s = p.t / p.m;
    let CartParams { m, l, h, t } = *p;

    let f = {
        let (s, l, h, t, m) = (s, l, h, t, m);
        Arc::new(move |x: &DVector<f64>, u: &DVector<f64>| {
            dvector![
                x[0] + t * x[1],
                -l * s * (-x[0]).exp() + (1.0 - h * t / m) * x[1] + s * u[0]
            ]
        }) as Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>
    };

    let g = {
        Arc::new(move |x: &DVector<f64>, _u: &DVector<f64>| dmatrix![0.0; -s * x[1]])
            as Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>
    };

    // d f2 / d x1 = l s exp(-x1): monotone, so the exact range over a
    // box comes from its endpoints.
    let jac_x_f = {
        let (s, l, h, t, m) = (s, l, h, t, m);
        Arc::new(move |xb: &IntervalBox, _u: &DVector<f64>| {
            let e = xb.axis(0).neg().exp().scale(l * s);
            IntervalMatrix::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => Interval::point(1.0),
                (0, 1) => Interval::point(t),
                (1, 0) => e,
                _ => Interval::point(1.0 - h * t / m),
            })
        }) as Arc<dyn Fn(&IntervalBox, &DVector<f64>) -> IntervalMatrix + Send + Sync>
    };

    // d (g v) / d x = [[0, 0], [0, -s v]] for v in its box.
    let jac_x_g = {
        Arc::new(move |_xb: &IntervalBox, _u: &DVector<f64>, vb: &IntervalBox| {
            let dv = vb.axis(0).scale(-s);
            IntervalMatrix::from_fn(2, 2, |i, j| {
                if (i, j) == (1, 1) {
                    dv
                } else {
                    Interval::point(0.0)
                }
            })
        })
            as Arc<
                dyn Fn(&IntervalBox, &DVector<f64>, &IntervalBox) -> IntervalMatrix
                    + Send
                    + Sync,
            >
    };

    PlantModel::new(
        2,
        1,
        1,
        f,
        g,
        jac_x_f,
        jac_x_g,
        IntervalBox::symmetric(dvector![X1_BOUND, X2_BOUND])?,
        IntervalBox::symmetric(dvector![U_BOUND])?,
        Zonotope::new(dvector![0.0, 0.0], dmatrix![0.0; s * D_BOUND])?,
        Zonotope::symmetric_scalar(V_BOUND)?,
    )
}

/// Stage cost weights for the benchmark.
pub fn cart_weights() -> Result<CostWeights> {
    CostWeights::new(DMatrix::from_diagonal(&dvector![0.64, 0.64]), dmatrix![1.0])
}

/// Terminal cost, level, and local feedback for the benchmark.
pub fn cart_terminal() -> Result<TerminalIngredients> {
    TerminalIngredients::new(
        dmatrix![4.5678, 3.2018; 3.2018, 4.3500],
        3.8,
        dmatrix![-0.7797, -1.1029],
    )
}

/// Drifting-offset uncertainty model with the benchmark bounds.
pub fn cart_uncertainty(rate: f64) -> Result<UncertaintyModel> {
    UncertaintyModel::bounded_drift(dvector![V_BOUND], dvector![rate])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_from_the_unit_state_matches_hand_values() {
        let p = CartParams::default();
        let x = cart_step(&dvector![1.0, 1.0], 0.0, 0.0, 0.0, &p);
        assert!((x[0] - 1.4).abs() < 1e-15);
        assert!((x[1] - (0.56 - 0.132 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((x[1] - 0.5114399137653696).abs() < 1e-12);
    }

    #[test]
    fn origin_is_not_an_equilibrium() {
        let p = CartParams::default();
        let x = cart_step(&dvector![0.0, 0.0], 0.0, 0.0, 0.0, &p);
        assert!((x[0] - 0.0).abs() < 1e-15);
        assert!((x[1] + 0.132).abs() < 1e-15);
        let plant = cart_plant(&p).unwrap();
        assert!(!plant.origin_is_equilibrium);
    }

    #[test]
    fn damping_offset_shifts_the_velocity_linearly() {
        let p = CartParams::default();
        let base = cart_step(&dvector![0.0, 1.0], 0.0, 0.0, 0.0, &p);
        let bumped = cart_step(&dvector![0.0, 1.0], 0.0, 0.15, 0.0, &p);
        assert!((bumped[1] - base[1] + 0.06).abs() < 1e-15);
        assert!((bumped[0] - base[0]).abs() < 1e-15);
    }

    #[test]
    fn plant_step_agrees_with_the_scalar_form() {
        let p = CartParams::default();
        let plant = cart_plant(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = dvector![rng.gen_range(-2.0..2.0f64), rng.gen_range(-3.0..3.0f64)];
            let u = rng.gen_range(-4.5..4.5f64);
            let v = rng.gen_range(-0.15..0.15f64);
            let d = rng.gen_range(-0.1..0.1f64);
            let got = plant.step(
                &x,
                &dvector![u],
                &dvector![v],
                &dvector![0.0, p.t / p.m * d],
            );
            let want = cart_step(&x, u, v, d, &p);
            assert!((got - want).amax() < 1e-14);
        }
    }

    #[test]
    fn interval_jacobian_encloses_the_analytic_one() {
        let p = CartParams::default();
        let plant = cart_plant(&p).unwrap();
        let xb = IntervalBox::new(dvector![-0.5, -1.0], dvector![1.5, 2.0]).unwrap();
        let vb = IntervalBox::symmetric(dvector![0.15]).unwrap();
        let enclosure = plant.jac_x_total(&xb, &dvector![0.3], &vb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..2000 {
            let x1 = rng.gen_range(-0.5..1.5f64);
            let v = rng.gen_range(-0.15..0.15f64);
            let s = p.t / p.m;
            let analytic = dmatrix![
                1.0, p.t;
                p.l * s * (-x1).exp(), 1.0 - p.h * s - s * v
            ];
            assert!(enclosure.contains(&analytic, 1e-12));
        }
        // Tightness at a corner: the lower edge of the exp entry is
        // attained at the right end of the position range.
        let lo = enclosure.entry(1, 0).inf;
        assert!((lo - p.l * p.t / p.m * (-1.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn terminal_cost_at_the_unit_state() {
        let term = cart_terminal().unwrap();
        assert!((term.terminal_cost(&dvector![1.0, 1.0]) - 15.3214).abs() < 1e-12);
    }

    #[test]
    fn disturbance_set_is_pre_scaled() {
        let p = CartParams::default();
        let plant = cart_plant(&p).unwrap();
        let hull = plant.d_set.interval_hull();
        assert!((hull.upper()[1] - 0.04).abs() < 1e-15);
        assert!(hull.radius()[0].abs() < 1e-15);
    }
}
