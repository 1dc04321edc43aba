//! Plant description used by the estimator and the controller.
//!
//! Dynamics are affine in the unknown parameter and the disturbance:
//!
//! ```text
//! x+ = f(x, u) + g(x, u) v + d,    v in V,  d in D,
//! ```
//!
//! with `f`, `g` supplied as closures together with interval-evaluable
//! state Jacobians of both terms. The Jacobian closures must return
//! enclosures valid over the whole requested state box (and parameter
//! box for the `g v` term); every guaranteed-containment result
//! downstream inherits its validity from that contract.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::set::{IntervalBox, IntervalMatrix, Zonotope};

pub type DynFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type GainFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type JacFFn = Arc<dyn Fn(&IntervalBox, &DVector<f64>) -> IntervalMatrix + Send + Sync>;
pub type JacGFn =
    Arc<dyn Fn(&IntervalBox, &DVector<f64>, &IntervalBox) -> IntervalMatrix + Send + Sync>;

#[derive(Clone)]
pub struct PlantModel {
    pub n_x: usize,
    pub n_u: usize,
    pub n_v: usize,
    f: DynFn,
    g: GainFn,
    /// Interval enclosure of `d f / d x` over a state box.
    jac_x_f: JacFFn,
    /// Interval enclosure of `d (g(x,u) v) / d x` over a state box and a
    /// parameter box.
    jac_x_g: JacGFn,
    pub state_bounds: IntervalBox,
    pub input_bounds: IntervalBox,
    pub d_set: Zonotope,
    pub v_prior: Zonotope,
    /// Whether `f(0,0) = 0` and `g(0,0) = 0` hold (within 1e-12). Models
    /// with an offset at the origin still run, but regulation settles at
    /// the cost-optimal offset instead of the origin; callers may warn.
    pub origin_is_equilibrium: bool,
}

impl PlantModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_x: usize,
        n_u: usize,
        n_v: usize,
        f: DynFn,
        g: GainFn,
        jac_x_f: JacFFn,
        jac_x_g: JacGFn,
        state_bounds: IntervalBox,
        input_bounds: IntervalBox,
        d_set: Zonotope,
        v_prior: Zonotope,
    ) -> Result<Self> {
        if state_bounds.dim() != n_x {
            return Err(Error::DimensionMismatch {
                context: "PlantModel state bounds",
                expected: n_x,
                got: state_bounds.dim(),
            });
        }
        if input_bounds.dim() != n_u {
            return Err(Error::DimensionMismatch {
                context: "PlantModel input bounds",
                expected: n_u,
                got: input_bounds.dim(),
            });
        }
        if d_set.dim() != n_x {
            return Err(Error::DimensionMismatch {
                context: "PlantModel disturbance set",
                expected: n_x,
                got: d_set.dim(),
            });
        }
        if v_prior.dim() != n_v {
            return Err(Error::DimensionMismatch {
                context: "PlantModel parameter prior",
                expected: n_v,
                got: v_prior.dim(),
            });
        }
        let zero_x = DVector::zeros(n_x);
        let zero_u = DVector::zeros(n_u);
        let f0 = f(&zero_x, &zero_u);
        let g0 = g(&zero_x, &zero_u);
        if f0.len() != n_x {
            return Err(Error::DimensionMismatch {
                context: "PlantModel f output",
                expected: n_x,
                got: f0.len(),
            });
        }
        if g0.shape() != (n_x, n_v) {
            return Err(Error::DimensionMismatch {
                context: "PlantModel g output",
                expected: n_x * n_v,
                got: g0.len(),
            });
        }
        let origin_is_equilibrium = f0.amax() <= 1e-12 && (n_v == 0 || g0.amax() <= 1e-12);
        Ok(PlantModel {
            n_x,
            n_u,
            n_v,
            f,
            g,
            jac_x_f,
            jac_x_g,
            state_bounds,
            input_bounds,
            d_set,
            v_prior,
            origin_is_equilibrium,
        })
    }

    pub fn f(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.f)(x, u)
    }

    pub fn g(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        (self.g)(x, u)
    }

    /// One step of the true dynamics for given realizations.
    pub fn step(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        v: &DVector<f64>,
        d: &DVector<f64>,
    ) -> DVector<f64> {
        (self.f)(x, u) + (self.g)(x, u) * v + d
    }

    /// Interval enclosure of the full state Jacobian
    /// `d (f + g v) / d x` over a state box and a parameter box.
    pub fn jac_x_total(
        &self,
        x_box: &IntervalBox,
        u: &DVector<f64>,
        v_box: &IntervalBox,
    ) -> Result<IntervalMatrix> {
        let jf = (self.jac_x_f)(x_box, u);
        let jg = (self.jac_x_g)(x_box, u, v_box);
        jf.add(&jg)
    }

    pub fn jac_x_f(&self, x_box: &IntervalBox, u: &DVector<f64>) -> IntervalMatrix {
        (self.jac_x_f)(x_box, u)
    }

    pub fn jac_x_g(
        &self,
        x_box: &IntervalBox,
        u: &DVector<f64>,
        v_box: &IntervalBox,
    ) -> IntervalMatrix {
        (self.jac_x_g)(x_box, u, v_box)
    }

    /// Componentwise clamp onto the input box.
    pub fn clamp_input(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_u, |i, _| {
            u[i].clamp(self.input_bounds.lower()[i], self.input_bounds.upper()[i])
        })
    }
}

impl std::fmt::Debug for PlantModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlantModel")
            .field("n_x", &self.n_x)
            .field("n_u", &self.n_u)
            .field("n_v", &self.n_v)
            .field("origin_is_equilibrium", &self.origin_is_equilibrium)
            .finish()
    }
}

/// Linear test plant `x+ = A x + B u + Gm v + d`; exact Jacobians.
/// Used by tests and available for quick experiments.
pub fn linear_plant(
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    gm: DMatrix<f64>,
    state_bounds: IntervalBox,
    input_bounds: IntervalBox,
    d_set: Zonotope,
    v_prior: Zonotope,
) -> Result<PlantModel> {
    let n_x = a.nrows();
    let n_u = b.ncols();
    let n_v = gm.ncols();
    let a1 = a.clone();
    let b1 = b.clone();
    let gm1 = gm.clone();
    let a2 = a.clone();
    let f: DynFn = Arc::new(move |x, u| &a1 * x + &b1 * u);
    let g: GainFn = Arc::new(move |_, _| gm1.clone());
    let jac_f: JacFFn = Arc::new(move |_, _| IntervalMatrix::exact(a2.clone()));
    let n = a.nrows();
    let jac_g: JacGFn = Arc::new(move |_, _, _| IntervalMatrix::exact(DMatrix::zeros(n, n)));
    PlantModel::new(
        n_x,
        n_u,
        n_v,
        f,
        g,
        jac_f,
        jac_g,
        state_bounds,
        input_bounds,
        d_set,
        v_prior,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn toy_linear() -> PlantModel {
        linear_plant(
            dmatrix![0.5, 0.1; 0.0, 0.8],
            dmatrix![0.0; 1.0],
            dmatrix![1.0; 0.0],
            IntervalBox::symmetric(dvector![10.0, 10.0]).unwrap(),
            IntervalBox::symmetric(dvector![2.0]).unwrap(),
            Zonotope::new(dvector![0.0, 0.0], dmatrix![0.01; 0.0]).unwrap(),
            Zonotope::symmetric_scalar(0.1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn step_assembles_terms() {
        let p = toy_linear();
        let x = dvector![1.0, 2.0];
        let u = dvector![0.5];
        let v = dvector![0.1];
        let d = dvector![0.01, 0.0];
        let next = p.step(&x, &u, &v, &d);
        assert!((next[0] - (0.5 + 0.2 + 0.1 + 0.01)).abs() < 1e-12);
        assert!((next[1] - (1.6 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn origin_flag_needs_both_terms_to_vanish() {
        // The parameter gain is nonzero at the origin, so v shifts the
        // equilibrium and the flag must be off.
        assert!(!toy_linear().origin_is_equilibrium);
        let plain = linear_plant(
            dmatrix![0.5, 0.1; 0.0, 0.8],
            dmatrix![0.0; 1.0],
            dmatrix![0.0; 0.0],
            IntervalBox::symmetric(dvector![10.0, 10.0]).unwrap(),
            IntervalBox::symmetric(dvector![2.0]).unwrap(),
            Zonotope::new(dvector![0.0, 0.0], dmatrix![0.01; 0.0]).unwrap(),
            Zonotope::symmetric_scalar(0.1).unwrap(),
        )
        .unwrap();
        assert!(plain.origin_is_equilibrium);
    }

    #[test]
    fn clamp_input_projects_onto_bounds() {
        let p = toy_linear();
        assert_eq!(p.clamp_input(&dvector![5.0])[0], 2.0);
        assert_eq!(p.clamp_input(&dvector![-5.0])[0], -2.0);
        assert_eq!(p.clamp_input(&dvector![0.3])[0], 0.3);
    }

    #[test]
    fn dimension_checks_fire() {
        let bad = linear_plant(
            dmatrix![0.5, 0.1; 0.0, 0.8],
            dmatrix![0.0; 1.0],
            dmatrix![1.0; 0.0],
            IntervalBox::symmetric(dvector![10.0]).unwrap(), // wrong dim
            IntervalBox::symmetric(dvector![2.0]).unwrap(),
            Zonotope::new(dvector![0.0, 0.0], dmatrix![0.01; 0.0]).unwrap(),
            Zonotope::symmetric_scalar(0.1).unwrap(),
        );
        assert!(bad.is_err());
    }
}
