//! Convex bodies, radial transport maps, tangent cones, and numerical
//! isoperimetric profiles with bound, oracle, and audit machinery.

pub mod cones;
pub mod converge;
pub mod convex;
pub mod density;
pub mod error;
pub mod io;
pub mod linalg;
pub mod par;

pub use convex::{ConvexBody, MetricBall};
pub use error::{Error, Result};
pub mod profile;
pub mod transport;
