//! Finite intersections of zonotopes.
//!
//! Zonotopes are not closed under intersection, so an intersection is
//! kept in lazy form as the list of its members; the represented set is
//! the set of points inside every member. Dropping or merging members
//! only ever enlarges the represented set, which keeps every reduction
//! here sound for outer-approximation work.
//!
//! Convention: members are ordered oldest first, and the final member is
//! the standing prior bound that guarantees boundedness. Capping merges
//! from the front and never touches the final member.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::set::interval::IntervalBox;
use crate::set::zonotope::Zonotope;

/// Member cap; exceeding it merges the oldest members into one hull box.
pub const MAX_MEMBERS: usize = 8;

#[derive(Debug, Clone)]
pub struct ZonoIntersection {
    members: Vec<Zonotope>,
}

impl ZonoIntersection {
    pub fn new(members: Vec<Zonotope>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidConfig(
                "intersection needs at least one member".into(),
            ));
        }
        let dim = members[0].dim();
        for m in &members[1..] {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "ZonoIntersection::new",
                    expected: dim,
                    got: m.dim(),
                });
            }
        }
        let mut z = ZonoIntersection { members };
        z.cap(MAX_MEMBERS);
        Ok(z)
    }

    pub fn from_single(z: Zonotope) -> Self {
        ZonoIntersection { members: vec![z] }
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn members(&self) -> &[Zonotope] {
        &self.members
    }

    /// Intersection of the member interval hulls: a cheap outer box for
    /// the represented set. Errors when the hulls have no common point.
    pub fn hull_intersection(&self) -> Result<IntervalBox> {
        let mut out = self.members[0].interval_hull();
        for m in &self.members[1..] {
            out = out
                .intersect(&m.interval_hull())
                .ok_or(Error::EmptyIntersection)?;
        }
        Ok(out)
    }

    /// Euclidean diameter of the hull intersection (exact supremum of
    /// point distances in one dimension, outer bound otherwise).
    pub fn diameter(&self) -> Result<f64> {
        Ok(self.hull_intersection()?.diagonal())
    }

    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.members.iter().all(|m| m.contains_point(x, tol))
    }

    /// Rejection sample from the hull intersection; `None` when the hull
    /// is empty or no draw lands inside every member.
    pub fn sample_rejection<R: Rng>(&self, rng: &mut R, max_tries: usize) -> Option<DVector<f64>> {
        let hull = self.hull_intersection().ok()?;
        let hull_z = Zonotope::from_interval_box(&hull);
        for _ in 0..max_tries {
            let x = hull_z.sample(rng);
            if self.contains_point(&x, 0.0) {
                return Some(x);
            }
        }
        None
    }

    /// Enforce the member cap: merge the oldest surplus members into the
    /// box of their hull intersection (outward), keeping the final member
    /// (the standing prior) in place. If the surplus hulls have drifted
    /// apart numerically they are dropped instead, which is also outward.
    fn cap(&mut self, max_members: usize) {
        if self.members.len() <= max_members.max(2) {
            return;
        }
        let surplus = self.members.len() - max_members + 1;
        let merged: Vec<Zonotope> = self.members.drain(..surplus).collect();
        let mut hull = Some(merged[0].interval_hull());
        for m in &merged[1..] {
            hull = hull.and_then(|h| h.intersect(&m.interval_hull()));
        }
        if let Some(h) = hull {
            self.members.insert(0, Zonotope::from_interval_box(&h));
        }
    }

    /// Appends a member (then re-caps). The caller keeps the convention
    /// that the standing prior stays last.
    pub fn push_member(&mut self, z: Zonotope) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "ZonoIntersection::push_member",
                expected: self.dim(),
                got: z.dim(),
            });
        }
        self.members.push(z);
        self.cap(MAX_MEMBERS);
        Ok(())
    }
}
