//! Guaranteed set computation: intervals, zonotopes, strips, half-space
//! polytopes and the inclusion operators connecting them.

pub mod interval;
pub mod intersection;
pub mod linprog;
pub mod polytope;
pub mod strip;
pub mod zonotope;

pub use interval::{Interval, IntervalBox, IntervalMatrix};
pub use intersection::{ZonoIntersection, MAX_MEMBERS};
pub use polytope::HalfSpacePolytope;
pub use strip::Strip;
pub use zonotope::{
    centered_inclusion, zonotope_inclusion, InclusionFn, Zonotope, MAX_GENERATORS, MEMBERSHIP_TOL,
};
