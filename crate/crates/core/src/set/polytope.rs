//! Half-space polytopes and their decomposition into zonotope
//! intersections.
//!
//! A bounded polytope `P = {x : A x <= b}` equals the intersection of
//! finitely many parallelotopes, one per half-space: for face `i`, take
//! the slab between the face plane and the farthest parallel plane still
//! touching `P`, then bound `P` in the directions orthogonal to the face
//! normal. Each such parallelotope contains `P` and clamps exactly at
//! its own face, so the intersection over all faces reproduces `P`
//! exactly while every member is a zonotope.
//!
//! Members whose set contains another member are redundant and dropped,
//! so symmetric inputs (boxes, intervals) come back as a single member.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::set::intersection::ZonoIntersection;
use crate::set::linprog::{maximize, LpSolution};
use crate::set::zonotope::Zonotope;

#[derive(Debug, Clone)]
pub struct HalfSpacePolytope {
    normals: DMatrix<f64>, // unit rows
    offsets: DVector<f64>,
}

impl HalfSpacePolytope {
    /// Builds `{x : A x <= b}`; rows are normalized to unit norm.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "HalfSpacePolytope::new",
                expected: b.len(),
                got: a.nrows(),
            });
        }
        let mut normals = a;
        let mut offsets = b;
        for i in 0..normals.nrows() {
            let norm = normals.row(i).norm();
            if norm < 1e-12 {
                return Err(Error::InvalidConfig(
                    "half-space with zero normal".into(),
                ));
            }
            for j in 0..normals.ncols() {
                normals[(i, j)] /= norm;
            }
            offsets[i] /= norm;
        }
        Ok(HalfSpacePolytope { normals, offsets })
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn num_faces(&self) -> usize {
        self.normals.nrows()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (0..self.num_faces()).all(|i| {
            let row: DVector<f64> = self.normals.row(i).transpose();
            row.dot(x) <= self.offsets[i] + tol
        })
    }

    /// Support value `max {d'x : x in P}`.
    fn support(&self, dir: &DVector<f64>) -> Result<f64> {
        match maximize(dir, &self.normals, &self.offsets) {
            LpSolution::Optimal(_, v) => Ok(v),
            LpSolution::Infeasible => Err(Error::EmptyPolytope),
            LpSolution::Unbounded => Err(Error::UnboundedPolytope),
        }
    }

    /// Decomposes the polytope into parallelotopes whose intersection is
    /// exactly the polytope. Errors on empty or unbounded input.
    pub fn to_zonotopes(&self) -> Result<ZonoIntersection> {
        let n = self.dim();
        // boundedness (and emptiness) probe along every axis
        for i in 0..n {
            let mut dir = DVector::zeros(n);
            dir[i] = 1.0;
            self.support(&dir)?;
            dir[i] = -1.0;
            self.support(&dir)?;
        }

        let mut members = Vec::with_capacity(self.num_faces());
        for i in 0..self.num_faces() {
            let normal: DVector<f64> = self.normals.row(i).transpose();
            let frame = orthonormal_frame(&normal);
            let mut center = DVector::zeros(n);
            let mut generators = DMatrix::zeros(n, n);
            for (k, q) in frame.iter().enumerate() {
                let hi = self.support(q)?;
                let lo = -self.support(&(-q))?;
                center += q * (0.5 * (hi + lo));
                generators.column_mut(k).copy_from(&(q * (0.5 * (hi - lo))));
            }
            members.push(Zonotope::new(center, generators)?);
        }

        // drop members that contain another member (keep the lower index
        // among equals); parallelotope corners make the check exact
        let corner_sets: Vec<Vec<DVector<f64>>> = members.iter().map(corners).collect();
        let subset = |a: usize, b: usize| -> bool {
            corner_sets[a]
                .iter()
                .all(|x| members[b].contains_point(x, 1e-9))
        };
        let mut keep = vec![true; members.len()];
        for i in 0..members.len() {
            if !keep[i] {
                continue;
            }
            for j in 0..members.len() {
                if i == j || !keep[j] {
                    continue;
                }
                // member j contains member i: j is redundant, unless they
                // are mutually containing (equal), where the earlier stays
                if subset(i, j) && (!subset(j, i) || i < j) {
                    keep[j] = false;
                }
            }
        }
        let kept: Vec<Zonotope> = members
            .into_iter()
            .zip(keep)
            .filter_map(|(m, k)| k.then_some(m))
            .collect();
        ZonoIntersection::new(kept)
    }
}

/// Orthonormal basis whose first vector is `normal` (assumed unit).
fn orthonormal_frame(normal: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = normal.len();
    let mut frame = vec![normal.clone()];
    for axis in 0..n {
        if frame.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[axis] = 1.0;
        for q in &frame {
            let proj = q.dot(&w);
            w -= q * proj;
        }
        let norm = w.norm();
        if norm > 1e-9 {
            frame.push(w / norm);
        }
    }
    debug_assert_eq!(frame.len(), n);
    frame
}

/// Corner points of a zonotope with at most a handful of generators.
fn corners(z: &Zonotope) -> Vec<DVector<f64>> {
    let m = z.order();
    let mut out = Vec::with_capacity(1 << m);
    for mask in 0..(1usize << m) {
        let mut x = z.center().clone();
        for j in 0..m {
            let sign = if mask & (1 << j) != 0 { 1.0 } else { -1.0 };
            x += z.generators().column(j) * sign;
        }
        out.push(x);
    }
    out
}
