//! Scalar intervals, interval boxes and interval matrices.
//!
//! These are the outer-approximation primitives everything else leans on:
//! an `Interval` is a closed segment `[inf, sup]`, an `IntervalBox` is an
//! axis-aligned box (one interval per coordinate) and an `IntervalMatrix`
//! stores a midpoint matrix together with an entrywise radius matrix, i.e.
//! the set of all matrices `A` with `|A - mid| <= rad` entrywise.
//!
//! Arithmetic is plain double precision without directed rounding; all
//! downstream containment checks carry an explicit tolerance that absorbs
//! the last-ulp error this leaves behind.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Closed scalar interval `[inf, sup]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub inf: f64,
    pub sup: f64,
}

impl Interval {
    pub fn new(inf: f64, sup: f64) -> Result<Self> {
        if inf > sup {
            return Err(Error::InvertedBounds);
        }
        Ok(Interval { inf, sup })
    }

    pub fn point(v: f64) -> Self {
        Interval { inf: v, sup: v }
    }

    /// Interval written as `mid +- rad`.
    pub fn centered(mid: f64, rad: f64) -> Result<Self> {
        if rad < 0.0 {
            return Err(Error::NegativeRadius);
        }
        Ok(Interval {
            inf: mid - rad,
            sup: mid + rad,
        })
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.inf + self.sup)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.sup - self.inf)
    }

    pub fn width(&self) -> f64 {
        self.sup - self.inf
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.inf - tol && v <= self.sup + tol
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            inf: self.inf + o.inf,
            sup: self.sup + o.sup,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            inf: -self.sup,
            sup: -self.inf,
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [
            self.inf * o.inf,
            self.inf * o.sup,
            self.sup * o.inf,
            self.sup * o.sup,
        ];
        Interval {
            inf: c.iter().cloned().fold(f64::INFINITY, f64::min),
            sup: c.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn scale(&self, k: f64) -> Interval {
        if k >= 0.0 {
            Interval {
                inf: k * self.inf,
                sup: k * self.sup,
            }
        } else {
            Interval {
                inf: k * self.sup,
                sup: k * self.inf,
            }
        }
    }

    pub fn shift(&self, k: f64) -> Interval {
        Interval {
            inf: self.inf + k,
            sup: self.sup + k,
        }
    }

    /// Monotone image under `exp`.
    pub fn exp(&self) -> Interval {
        Interval {
            inf: self.inf.exp(),
            sup: self.sup.exp(),
        }
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, o: &Interval) -> Interval {
        Interval {
            inf: self.inf.min(o.inf),
            sup: self.sup.max(o.sup),
        }
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let inf = self.inf.max(o.inf);
        let sup = self.sup.min(o.sup);
        if inf <= sup {
            Some(Interval { inf, sup })
        } else {
            None
        }
    }
}

/// Axis-aligned box: one closed interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl IntervalBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "IntervalBox::new",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvertedBounds);
        }
        Ok(IntervalBox { lower, upper })
    }

    pub fn point(x: DVector<f64>) -> Self {
        IntervalBox {
            lower: x.clone(),
            upper: x,
        }
    }

    /// Box `center +- radius` (componentwise).
    pub fn centered(center: DVector<f64>, radius: DVector<f64>) -> Result<Self> {
        if center.len() != radius.len() {
            return Err(Error::DimensionMismatch {
                context: "IntervalBox::centered",
                expected: center.len(),
                got: radius.len(),
            });
        }
        if radius.iter().any(|r| *r < 0.0) {
            return Err(Error::NegativeRadius);
        }
        Ok(IntervalBox {
            lower: &center - &radius,
            upper: &center + &radius,
        })
    }

    /// Symmetric box `[-r, r]^n` from per-axis radii.
    pub fn symmetric(radius: DVector<f64>) -> Result<Self> {
        let n = radius.len();
        Self::centered(DVector::zeros(n), radius)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn radius(&self) -> DVector<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    pub fn axis(&self, i: usize) -> Interval {
        Interval {
            inf: self.lower[i],
            sup: self.upper[i],
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower[i] - tol && *v <= self.upper[i] + tol)
    }

    pub fn intersect(&self, o: &IntervalBox) -> Option<IntervalBox> {
        if self.dim() != o.dim() {
            return None;
        }
        let lower = self.lower.zip_map(&o.lower, f64::max);
        let upper = self.upper.zip_map(&o.upper, f64::min);
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            None
        } else {
            Some(IntervalBox { lower, upper })
        }
    }

    /// Minkowski sum (componentwise interval sum).
    pub fn sum(&self, o: &IntervalBox) -> Result<IntervalBox> {
        if self.dim() != o.dim() {
            return Err(Error::DimensionMismatch {
                context: "IntervalBox::sum",
                expected: self.dim(),
                got: o.dim(),
            });
        }
        Ok(IntervalBox {
            lower: &self.lower + &o.lower,
            upper: &self.upper + &o.upper,
        })
    }

    /// Length of the main diagonal.
    pub fn diagonal(&self) -> f64 {
        (&self.upper - &self.lower).norm()
    }

    /// Corner points; axes of zero width contribute a single value, so a
    /// degenerate box yields fewer than `2^n` corners.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        let mut out = vec![DVector::zeros(n)];
        for i in 0..n {
            let lo = self.lower[i];
            let hi = self.upper[i];
            if lo == hi {
                for v in &mut out {
                    v[i] = lo;
                }
            } else {
                let mut doubled = Vec::with_capacity(out.len() * 2);
                for v in &out {
                    let mut a = v.clone();
                    a[i] = lo;
                    let mut b = v.clone();
                    b[i] = hi;
                    doubled.push(a);
                    doubled.push(b);
                }
                out = doubled;
            }
        }
        out
    }
}

/// Matrix interval `{A : |A - mid| <= rad entrywise}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    midpoint: DMatrix<f64>,
    radius: DMatrix<f64>,
}

impl IntervalMatrix {
    pub fn new(midpoint: DMatrix<f64>, radius: DMatrix<f64>) -> Result<Self> {
        if midpoint.shape() != radius.shape() {
            return Err(Error::DimensionMismatch {
                context: "IntervalMatrix::new",
                expected: midpoint.len(),
                got: radius.len(),
            });
        }
        if radius.iter().any(|r| *r < 0.0) {
            return Err(Error::NegativeRadius);
        }
        Ok(IntervalMatrix { midpoint, radius })
    }

    pub fn exact(m: DMatrix<f64>) -> Self {
        let radius = DMatrix::zeros(m.nrows(), m.ncols());
        IntervalMatrix {
            midpoint: m,
            radius,
        }
    }

    /// Build entrywise from scalar intervals.
    pub fn from_fn<F>(nrows: usize, ncols: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> Interval,
    {
        let mut midpoint = DMatrix::zeros(nrows, ncols);
        let mut radius = DMatrix::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                let iv = f(i, j);
                midpoint[(i, j)] = iv.mid();
                radius[(i, j)] = iv.rad();
            }
        }
        IntervalMatrix { midpoint, radius }
    }

    pub fn nrows(&self) -> usize {
        self.midpoint.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.midpoint.ncols()
    }

    pub fn midpoint(&self) -> &DMatrix<f64> {
        &self.midpoint
    }

    pub fn radius(&self) -> &DMatrix<f64> {
        &self.radius
    }

    pub fn entry(&self, i: usize, j: usize) -> Interval {
        Interval {
            inf: self.midpoint[(i, j)] - self.radius[(i, j)],
            sup: self.midpoint[(i, j)] + self.radius[(i, j)],
        }
    }

    pub fn contains(&self, a: &DMatrix<f64>, tol: f64) -> bool {
        a.shape() == self.midpoint.shape()
            && a.iter()
                .zip(self.midpoint.iter().zip(self.radius.iter()))
                .all(|(v, (m, r))| (v - m).abs() <= r + tol)
    }

    /// Entrywise sum `{A + B : A in self, B in other}`.
    pub fn add(&self, other: &IntervalMatrix) -> Result<IntervalMatrix> {
        if self.midpoint.shape() != other.midpoint.shape() {
            return Err(Error::DimensionMismatch {
                context: "IntervalMatrix::add",
                expected: self.midpoint.len(),
                got: other.midpoint.len(),
            });
        }
        Ok(IntervalMatrix {
            midpoint: &self.midpoint + &other.midpoint,
            radius: &self.radius + &other.radius,
        })
    }

    /// Tight product with a point matrix: `{A B : A in self}`.
    pub fn mul_matrix(&self, b: &DMatrix<f64>) -> Result<IntervalMatrix> {
        if self.ncols() != b.nrows() {
            return Err(Error::DimensionMismatch {
                context: "IntervalMatrix::mul_matrix",
                expected: self.ncols(),
                got: b.nrows(),
            });
        }
        let midpoint = &self.midpoint * b;
        let radius = &self.radius * b.abs();
        Ok(IntervalMatrix { midpoint, radius })
    }

    /// A sampled member of the interval, `mid + s .* rad` with `s` in
    /// `[-1, 1]` entrywise.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> DMatrix<f64> {
        let mut out = self.midpoint.clone();
        for (o, r) in out.iter_mut().zip(self.radius.iter()) {
            *o += rng.gen_range(-1.0..=1.0) * r;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn interval_mul_covers_sign_cases() {
        let a = Interval::new(-2.0, 3.0).unwrap();
        let b = Interval::new(-1.0, 4.0).unwrap();
        let p = a.mul(&b);
        // extremes among {2, -8, -3, 12}
        assert_eq!(p.inf, -8.0);
        assert_eq!(p.sup, 12.0);
    }

    #[test]
    fn interval_exp_is_monotone() {
        let a = Interval::new(-1.0, 2.0).unwrap();
        let e = a.exp();
        assert!((e.inf - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e.sup - 2.0f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(IntervalBox::new(dvector![0.0, 1.0], dvector![1.0, 0.0]).is_err());
        assert!(IntervalBox::centered(dvector![0.0], dvector![-0.1]).is_err());
    }

    #[test]
    fn box_vertices_collapse_degenerate_axes() {
        let b = IntervalBox::new(dvector![0.0, -1.0], dvector![0.0, 1.0]).unwrap();
        let vs = b.vertices();
        assert_eq!(vs.len(), 2);
        assert!(vs.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn box_intersection_empty_when_disjoint() {
        let a = IntervalBox::new(dvector![0.0], dvector![1.0]).unwrap();
        let b = IntervalBox::new(dvector![2.0], dvector![3.0]).unwrap();
        assert!(a.intersect(&b).is_none());
    }

    #[test]
    fn interval_matrix_contains_samples() {
        let m = IntervalMatrix::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, -1.0]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.2, 0.3]),
        )
        .unwrap();
        let mut rng = rand::thread_rng();
        for _ in 0..100 {
            let a = m.sample(&mut rng);
            assert!(m.contains(&a, 1e-12));
        }
    }

    #[test]
    fn interval_matrix_product_radius_uses_abs() {
        let m = IntervalMatrix::new(
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DMatrix::from_row_slice(1, 2, &[0.5, 0.5]),
        )
        .unwrap();
        let b = DMatrix::from_row_slice(2, 1, &[2.0, -3.0]);
        let p = m.mul_matrix(&b).unwrap();
        assert_eq!(p.midpoint()[(0, 0)], 5.0);
        assert_eq!(p.radius()[(0, 0)], 0.5 * 2.0 + 0.5 * 3.0);
    }
}
