//! Zonotopes and the inclusion operators built on them.
//!
//! A zonotope is the affine image of a unit cube,
//!
//! ```text
//! Z = { c + G s : ||s||_inf <= 1 },   c in R^n,  G in R^{n x m},
//! ```
//!
//! stored as the pair `(c, G)`. The class is closed under Minkowski sums
//! (column concatenation) and linear maps, which makes it the workhorse
//! for guaranteed reachability and set-membership computations:
//! both operations are exact, cheap, and never lose containment.
//!
//! Two over-approximating operators complete the calculus:
//!
//! * [`zonotope_inclusion`] encloses the product of an interval matrix
//!   with the unit cube by a concrete generator block, and
//! * [`centered_inclusion`] encloses the image of a zonotope under a
//!   nonlinear map `eta(v, delta)` by expanding around the center and
//!   bounding the Jacobian over the interval hull.
//!
//! Results are normalized: zero generator columns are pruned, and the
//! column count is capped (default 32) by merging the smallest-norm
//! columns into an interval-hull block, an outward (sound) reduction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::set::interval::{IntervalBox, IntervalMatrix};
use crate::set::linprog;

/// Hard cap on stored generator columns; reduction beyond it is outward.
pub const MAX_GENERATORS: usize = 32;

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    /// Builds `(c, G)`, pruning zero columns and capping the column count.
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::DimensionMismatch {
                context: "Zonotope::new",
                expected: center.len(),
                got: generators.nrows(),
            });
        }
        if center.iter().any(|v| !v.is_finite()) || generators.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Zonotope::new"));
        }
        let mut z = Zonotope { center, generators };
        z.normalize();
        Ok(z)
    }

    pub fn singleton(center: DVector<f64>) -> Self {
        let n = center.len();
        Zonotope {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    /// Axis-aligned box as a zonotope (one generator per non-degenerate axis).
    pub fn from_interval_box(b: &IntervalBox) -> Self {
        let n = b.dim();
        let mut z = Zonotope {
            center: b.center(),
            generators: DMatrix::from_diagonal(&b.radius()),
        };
        z.normalize();
        debug_assert!(n == z.dim());
        z
    }

    /// Symmetric interval `[-r, r]` around zero in one dimension.
    pub fn symmetric_scalar(r: f64) -> Result<Self> {
        if r < 0.0 {
            return Err(Error::NegativeRadius);
        }
        Zonotope::new(DVector::zeros(1), DMatrix::from_element(1, 1, r))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Number of generator columns.
    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn is_singleton(&self, tol: f64) -> bool {
        self.generators.iter().all(|g| g.abs() <= tol)
    }

    /// Support function `h(d) = max { d'x : x in Z } = d'c + sum_j |d'g_j|`.
    pub fn support(&self, dir: &DVector<f64>) -> f64 {
        let mut h = dir.dot(&self.center);
        for j in 0..self.generators.ncols() {
            h += dir.dot(&self.generators.column(j).into_owned()).abs();
        }
        h
    }

    /// Tightest axis-aligned box around the zonotope:
    /// component `i` spans `c_i +- sum_j |G_ij|`.
    pub fn interval_hull(&self) -> IntervalBox {
        let n = self.dim();
        let radius = DVector::from_fn(n, |i, _| self.generators.row(i).iter().map(|g| g.abs()).sum());
        IntervalBox::centered(self.center.clone(), radius).expect("radius is nonnegative")
    }

    /// Minkowski sum: centers add, generator matrices concatenate. Exact.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "Zonotope::minkowski_sum",
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let mut generators = DMatrix::zeros(self.dim(), self.order() + other.order());
        generators
            .columns_mut(0, self.order())
            .copy_from(&self.generators);
        generators
            .columns_mut(self.order(), other.order())
            .copy_from(&other.generators);
        Zonotope::new(&self.center + &other.center, generators)
    }

    /// Image under a linear map: `A Z = (A c, A G)`. Exact.
    pub fn linear_map(&self, a: &DMatrix<f64>) -> Result<Zonotope> {
        if a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "Zonotope::linear_map",
                expected: self.dim(),
                got: a.ncols(),
            });
        }
        Zonotope::new(a * &self.center, a * &self.generators)
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Zonotope> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "Zonotope::translate",
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(Zonotope {
            center: &self.center + v,
            generators: self.generators.clone(),
        })
    }

    /// Exact membership: is there `s` with `||s||_inf <= 1 + tol` and
    /// `c + G s = x`? Solved as a least-infinity-norm problem; a unique-
    /// solution fast path covers full-column-rank generator matrices.
    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        if !self.interval_hull().contains(x, tol) {
            return false;
        }
        let d = x - &self.center;
        let m = self.order();
        if m == 0 {
            return d.iter().all(|v| v.abs() <= tol);
        }
        if m <= self.dim() {
            // unique candidate when G has full column rank
            let svd = self.generators.clone().svd(true, true);
            let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
            if smin > 1e-10 {
                if let Ok(s) = svd.solve(&d, 1e-12) {
                    // the residual measures consistency with the span, and
                    // the solve leaves machine-level noise even for exact
                    // members, so it is judged at noise scale; the caller's
                    // tol applies to the coefficient bound
                    let scale = 1.0f64.max(d.amax()).max(self.generators.amax());
                    let residual = (&self.generators * &s - &d).amax();
                    return residual <= tol.max(1e-9 * scale) && s.amax() <= 1.0 + tol;
                }
            }
        }
        match linprog::min_infinity_norm(&self.generators, &d) {
            Some((_, v)) => v <= 1.0 + tol,
            None => false,
        }
    }

    /// Uniform sample `c + G s`, `s ~ U[-1,1]^m`. Uniform in coefficient
    /// space, not in volume.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let mut x = self.center.clone();
        for j in 0..self.order() {
            let s: f64 = rng.gen_range(-1.0..=1.0);
            x += self.generators.column(j) * s;
        }
        x
    }

    /// Prune zero columns and enforce the column cap by merging the
    /// smallest-norm columns into an interval-hull block (outward).
    fn normalize(&mut self) {
        let keep: Vec<usize> = (0..self.generators.ncols())
            .filter(|&j| self.generators.column(j).iter().any(|g| *g != 0.0))
            .collect();
        if keep.len() != self.generators.ncols() {
            self.generators = self.generators.select_columns(&keep);
        }
        let n = self.dim();
        let m = self.generators.ncols();
        let cap = MAX_GENERATORS.max(n);
        if m > cap {
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&a, &b| {
                let na = self.generators.column(a).norm();
                let nb = self.generators.column(b).norm();
                nb.partial_cmp(&na).unwrap().then(a.cmp(&b))
            });
            let kept = &idx[..cap - n];
            let merged = &idx[cap - n..];
            let mut g = DMatrix::zeros(n, cap);
            for (k, &j) in kept.iter().enumerate() {
                g.column_mut(k).copy_from(&self.generators.column(j));
            }
            for &j in merged {
                for i in 0..n {
                    g[(i, cap - n + i)] += self.generators[(i, j)].abs();
                }
            }
            self.generators = g;
            // the merge can introduce zero rows in the hull block
            let keep: Vec<usize> = (0..self.generators.ncols())
                .filter(|&j| self.generators.column(j).iter().any(|g| *g != 0.0))
                .collect();
            if keep.len() != self.generators.ncols() {
                self.generators = self.generators.select_columns(&keep);
            }
        }
    }
}

/// Generator block enclosing `{ A s : A in M, ||s||_inf <= 1 }` for an
/// interval matrix `M`: the midpoint columns plus one diagonal column per
/// row carrying that row's radius sum.
pub fn zonotope_inclusion(m: &IntervalMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let k = m.ncols();
    let mut block = DMatrix::zeros(n, k + n);
    block.columns_mut(0, k).copy_from(m.midpoint());
    for i in 0..n {
        block[(i, k + i)] = m.radius().row(i).iter().sum::<f64>();
    }
    block
}

/// The two evaluations [`centered_inclusion`] needs from a map
/// `eta(v, delta)`: the exact image of a single point `v` over a whole
/// delta-zonotope, and an interval matrix bounding `d eta / d v` over a
/// box of `v` and the same delta set.
pub struct InclusionFn {
    pub image: std::sync::Arc<dyn Fn(&DVector<f64>, &Zonotope) -> Zonotope + Send + Sync>,
    pub jacobian: std::sync::Arc<dyn Fn(&IntervalBox, &Zonotope) -> IntervalMatrix + Send + Sync>,
}

impl InclusionFn {
    /// Map `eta(v, delta) = v + delta` (parameter drifts by a bounded
    /// increment). Image is exact, the Jacobian is exactly the identity.
    pub fn additive_drift(dim: usize) -> Self {
        InclusionFn {
            image: std::sync::Arc::new(move |p: &DVector<f64>, m: &Zonotope| {
                Zonotope::new(p + m.center(), m.generators().clone()).expect("drift image")
            }),
            jacobian: std::sync::Arc::new(move |_: &IntervalBox, _: &Zonotope| {
                IntervalMatrix::exact(DMatrix::identity(dim, dim))
            }),
        }
    }
}

/// Centered inclusion of `eta(Z, M)`: the exact image of the center plus
/// the interval-Jacobian image of `Z - c`,
///
/// ```text
/// eta(Z, M)  <=  eta(c, M)  (+)  J(hull Z, M) (Z - c),
/// ```
///
/// with the Jacobian term enclosed via [`zonotope_inclusion`]. Sound for
/// any continuously differentiable `eta` whose Jacobian bound is valid
/// over the hull.
pub fn centered_inclusion(eta: &InclusionFn, z: &Zonotope, m_set: &Zonotope) -> Result<Zonotope> {
    let img = (eta.image)(z.center(), m_set);
    if img.center().iter().any(|v| !v.is_finite())
        || img.generators().iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("centered_inclusion image"));
    }
    if z.order() == 0 {
        return Ok(img);
    }
    let jac = (eta.jacobian)(&z.interval_hull(), m_set);
    if jac.ncols() != z.dim() {
        return Err(Error::DimensionMismatch {
            context: "centered_inclusion jacobian",
            expected: z.dim(),
            got: jac.ncols(),
        });
    }
    if jac.nrows() != img.dim() {
        return Err(Error::DimensionMismatch {
            context: "centered_inclusion jacobian rows",
            expected: img.dim(),
            got: jac.nrows(),
        });
    }
    if jac.midpoint().iter().any(|v| !v.is_finite()) || jac.radius().iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("centered_inclusion jacobian"));
    }
    let jg = jac.mul_matrix(z.generators())?;
    let block = zonotope_inclusion(&jg);
    let mut generators = DMatrix::zeros(img.dim(), img.order() + block.ncols());
    generators.columns_mut(0, img.order()).copy_from(img.generators());
    generators
        .columns_mut(img.order(), block.ncols())
        .copy_from(&block);
    Zonotope::new(img.center().clone(), generators)
}
