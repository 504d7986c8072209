//! Hyperbolic geometry of the genus-two surface `M0` and its unit tangent
//! bundle.

mod element;
mod fuchsian;
mod orbit;
mod surface;

pub use element::{hyperbolic_distance, Algebra, GroupElement};
pub use fuchsian::{surface_group, FuchsianGroup, ShellElement, MAX_REDUCTION_STEPS, SHELL_REACH};
pub use orbit::{axis_frame, default_companion, ClosedOrbit};
pub(crate) use orbit::golden_min;
pub use surface::{HorocycleKind, SurfacePoint};
