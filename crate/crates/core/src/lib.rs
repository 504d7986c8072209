//! Volume-preserving near-identity maps on `T^1 M0 x [0,1]` built from the
//! time-`delta` geodesic flow of a genus-two hyperbolic surface, together
//! with the numerical machinery that checks their ergodic and hyperbolic
//! properties.

pub mod access;
pub mod assembly;
pub mod cocycle;
pub mod error;
pub mod lab;
pub mod hyperbolic;
pub mod perturb;
pub mod product;

pub use error::{Error, Result};
