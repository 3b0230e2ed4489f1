//! Sun-shadow dynamics: Kepler flow inside the Earth's shadow strip, Stark
//! flow outside it, and the return map on the upper shadow boundary.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Loops over parallel fixed-size arrays read better with an index.
#![allow(clippy::needless_range_loop)]

pub mod brake;
pub mod checks;
pub mod coords;
pub mod error;
pub mod gauss;
pub mod manifolds;
pub mod params;
pub mod propagate;
pub mod special;
pub mod spline;
pub mod ssmap;
pub mod stark;

pub use coords::{Branch, CartesianState, IntegralSet, ParabolicState};
pub use error::{Error, ForbiddenReason, Result};
pub use params::PhysParams;
