//! Coverage and flocking control for vehicle swarms over static and moving
//! polygonal domains, with pairwise Hamilton-Jacobi collision avoidance for
//! double-integrator and planar fixed-wing vehicles.

// Parameter checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hj_grid;
pub mod metrics;
pub mod policy;
pub mod safety;
pub mod sim;
pub mod vec2;

pub use coverage::CoverageParams;
pub use dynamics::{DiState, FwLimits, FwState};
pub use error::{Error, Result};
pub use geometry::{Motion, MovingDomain, Polygon};
pub use sim::{run, Scenario};
pub use vec2::Vec2;
