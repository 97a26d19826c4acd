//! Set representations used throughout the controller: zonotopes (the fast
//! path), axis-aligned boxes (state and input constraints), halfspace
//! polytopes (scheduling region, disturbance bounds) and vertex polytopes
//! (the baseline the zonotope path is benchmarked against).
//!
//! All set values are immutable after construction and every operation is a
//! pure function.

mod directions;
mod hpolytope;
pub mod hull;
mod interval_box;
mod vpolytope;
mod zonotope;

pub use directions::{random_unit, TestDirections};
pub use hpolytope::HPolytope;
pub use interval_box::IntervalBox;
pub use vpolytope::VPolytope;
pub use zonotope::Zonotope;

/// Tolerance used by support-function set comparisons.
pub const SET_TOL: f64 = 1e-9;

/// Default generator budget per state dimension (`p_max = 5 n`).
pub const GENERATORS_PER_DIM: usize = 5;
