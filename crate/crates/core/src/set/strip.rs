//! Measurement strips and gain-based strip refinement of zonotopes.
//!
//! A strip is the preimage of an interval box under an affine observation:
//!
//! ```text
//! S = { v : y - Phi v in B },   Phi in R^{ny x nv},  B an IntervalBox,
//! ```
//!
//! i.e. every parameter value consistent with one observation `y` whose
//! residual is only known to lie in `B`. Refining a zonotope by a strip
//! keeps the result a zonotope: for any gain `L`,
//!
//! ```text
//! Z cap S  <=  { c + L(yb - Phi c),  [(I - L Phi) G  |  L diag(r)] },
//! ```
//!
//! with `yb` the strip's effective measurement (`y` minus the residual
//! center) and `r` the residual radii. The gain used here minimizes the
//! sum of squared generator entries, which has the closed form
//! `L = G A' (A A' + diag(r)^2)^{-1}` with `A = Phi G`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::set::interval::IntervalBox;
use crate::set::zonotope::Zonotope;

#[derive(Debug, Clone)]
pub struct Strip {
    regressor: DMatrix<f64>,
    offset: DVector<f64>,
    bound: IntervalBox,
}

impl Strip {
    pub fn new(regressor: DMatrix<f64>, offset: DVector<f64>, bound: IntervalBox) -> Result<Self> {
        if regressor.nrows() != offset.len() {
            return Err(Error::DimensionMismatch {
                context: "Strip::new rows",
                expected: offset.len(),
                got: regressor.nrows(),
            });
        }
        if bound.dim() != offset.len() {
            return Err(Error::DimensionMismatch {
                context: "Strip::new bound",
                expected: offset.len(),
                got: bound.dim(),
            });
        }
        Ok(Strip {
            regressor,
            offset,
            bound,
        })
    }

    pub fn regressor(&self) -> &DMatrix<f64> {
        &self.regressor
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn bound(&self) -> &IntervalBox {
        &self.bound
    }

    pub fn var_dim(&self) -> usize {
        self.regressor.ncols()
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        let residual = &self.offset - &self.regressor * v;
        self.bound.contains(&residual, tol)
    }

    /// Splits rows into effective ones (nonzero regressor) and checks the
    /// vacuous zero-regressor rows for consistency. An inconsistent zero
    /// row proves the strip empty.
    fn effective_rows(&self, tol: f64) -> Result<Vec<usize>> {
        let mut rows = Vec::new();
        let yb = &self.offset - self.bound.center();
        let r = self.bound.radius();
        for i in 0..self.regressor.nrows() {
            let row_norm = self.regressor.row(i).amax();
            if row_norm > 1e-12 {
                rows.push(i);
            } else if yb[i].abs() > r[i] + tol {
                return Err(Error::EmptyIntersection);
            }
        }
        Ok(rows)
    }
}

impl Zonotope {
    /// Refines `self` by a strip. Returns the refined zonotope and a flag
    /// telling whether any refinement was applied; the input comes back
    /// unchanged (flag `false`) when the strip already contains it, when
    /// every strip row is vacuous, or when the gain normalization is
    /// singular. An inconsistent zero-regressor row (no `v` can satisfy
    /// it) is reported as `EmptyIntersection`.
    ///
    /// The output always contains `self (cap) strip`.
    pub fn intersect_strip(&self, strip: &Strip) -> Result<(Zonotope, bool)> {
        if strip.var_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "intersect_strip",
                expected: self.dim(),
                got: strip.var_dim(),
            });
        }
        let rows = strip.effective_rows(1e-9)?;
        if rows.is_empty() {
            return Ok((self.clone(), false));
        }
        let phi = strip.regressor.select_rows(&rows);
        let yb_full = &strip.offset - strip.bound.center();
        let r_full = strip.bound.radius();
        let yb = DVector::from_fn(rows.len(), |k, _| yb_full[rows[k]]);
        let r = DVector::from_fn(rows.len(), |k, _| r_full[rows[k]]);

        // if the strip already contains the zonotope the intersection is
        // the zonotope itself and zero gain is optimal
        let inside = (0..rows.len()).all(|k| {
            let row: DVector<f64> = phi.row(k).transpose();
            let mid = row.dot(self.center());
            let rad: f64 = (0..self.order())
                .map(|j| row.dot(&self.generators().column(j).into_owned()).abs())
                .sum();
            mid - rad >= yb[k] - r[k] - 1e-12 && mid + rad <= yb[k] + r[k] + 1e-12
        });
        if inside {
            return Ok((self.clone(), false));
        }

        let a = &phi * self.generators(); // ny_eff x m
        let mut s = &a * a.transpose();
        for k in 0..rows.len() {
            s[(k, k)] += r[k] * r[k];
        }
        let ga_t = self.generators() * a.transpose(); // n x ny_eff
        let lambda = match s.clone().cholesky() {
            Some(chol) => {
                let sol = chol.solve(&ga_t.transpose()); // ny_eff x n
                sol.transpose()
            }
            None => match s.lu().solve(&ga_t.transpose()) {
                Some(sol) => sol.transpose(),
                None => return Ok((self.clone(), false)),
            },
        };
        if lambda.iter().any(|v| !v.is_finite()) {
            return Ok((self.clone(), false));
        }

        let center = self.center() + &lambda * (&yb - &phi * self.center());
        let i_lp = DMatrix::identity(self.dim(), self.dim()) - &lambda * &phi;
        let part1 = &i_lp * self.generators();
        let part2 = &lambda * DMatrix::from_diagonal(&r);
        let mut generators = DMatrix::zeros(self.dim(), part1.ncols() + part2.ncols());
        generators.columns_mut(0, part1.ncols()).copy_from(&part1);
        generators
            .columns_mut(part1.ncols(), part2.ncols())
            .copy_from(&part2);
        Ok((Zonotope::new(center, generators)?, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_strip(y: f64, rad: f64) -> Strip {
        Strip::new(
            dmatrix![1.0],
            dvector![y],
            IntervalBox::centered(dvector![0.0], dvector![rad]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_refinement_sandwich() {
        // [-1, 1] refined by |0.5 - v| <= 0.1: result must contain
        // [0.4, 0.6] and stay within [0.35, 0.65]
        let z = Zonotope::symmetric_scalar(1.0).unwrap();
        let strip = scalar_strip(0.5, 0.1);
        let (out, refined) = z.intersect_strip(&strip).unwrap();
        assert!(refined);
        let h = out.interval_hull();
        assert!(h.lower()[0] <= 0.4 && h.upper()[0] >= 0.6);
        assert!(h.lower()[0] >= 0.35 && h.upper()[0] <= 0.65);
    }

    #[test]
    fn containing_strip_returns_input() {
        let z = Zonotope::symmetric_scalar(1.0).unwrap();
        let strip = scalar_strip(0.0, 10.0);
        let (out, refined) = z.intersect_strip(&strip).unwrap();
        assert!(!refined);
        assert_eq!(out, z);
    }

    #[test]
    fn vacuous_consistent_row_dropped() {
        // zero regressor, residual inside bound: no information
        let z = Zonotope::symmetric_scalar(1.0).unwrap();
        let strip = Strip::new(
            dmatrix![0.0],
            dvector![0.05],
            IntervalBox::centered(dvector![0.0], dvector![0.1]).unwrap(),
        )
        .unwrap();
        let (out, refined) = z.intersect_strip(&strip).unwrap();
        assert!(!refined);
        assert_eq!(out, z);
    }

    #[test]
    fn inconsistent_zero_row_is_empty() {
        let z = Zonotope::symmetric_scalar(1.0).unwrap();
        let strip = Strip::new(
            dmatrix![0.0],
            dvector![0.5],
            IntervalBox::centered(dvector![0.0], dvector![0.1]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            z.intersect_strip(&strip),
            Err(Error::EmptyIntersection)
        ));
    }

    #[test]
    fn refinement_never_loses_intersection_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..40 {
            let gens = dmatrix![
                rng.gen_range(0.2..1.0), rng.gen_range(-0.3..0.3);
                rng.gen_range(-0.3..0.3), rng.gen_range(0.2..1.0)
            ];
            let z = Zonotope::new(dvector![rng.gen_range(-0.5..0.5), 0.0], gens).unwrap();
            let phi = dmatrix![rng.gen_range(-1.0..1.0f64), rng.gen_range(-1.0..1.0f64)];
            if phi.amax() < 0.1 {
                continue;
            }
            // measure a point actually drawn from z so the strip meets it
            let p = z.sample(&mut rng);
            let y = (&phi * &p)[0] + rng.gen_range(-0.05..0.05);
            let strip = Strip::new(
                phi,
                dvector![y],
                IntervalBox::centered(dvector![0.0], dvector![0.08]).unwrap(),
            )
            .unwrap();
            let (out, _) = z.intersect_strip(&strip).unwrap();
            let mut hits = 0;
            for _ in 0..400 {
                let x = z.sample(&mut rng);
                if strip.contains(&x, 0.0) {
                    hits += 1;
                    assert!(
                        out.contains_point(&x, 1e-9),
                        "case {case}: intersection point escaped"
                    );
                }
            }
            assert!(hits > 0, "case {case}: strip missed the zonotope entirely");
        }
    }

    #[test]
    fn strip_contains_matches_definition() {
        let strip = Strip::new(
            dmatrix![1.0, -1.0],
            dvector![0.2],
            IntervalBox::centered(dvector![0.0], dvector![0.1]).unwrap(),
        )
        .unwrap();
        assert!(strip.contains(&dvector![0.2, 0.05], 0.0));
        assert!(!strip.contains(&dvector![0.5, 0.0], 0.0));
    }
}
