//! Heteroclinic points, holonomy along closed orbits, su-legs and the
//! accessibility drift experiment.

pub mod drift;
pub mod heteroclinic;
pub mod holonomy;
pub mod leaves;

pub use drift::{accessibility_drift, h1_backward_bound, middle_segment, DriftReport, MiddleSegment};
pub use heteroclinic::{find_heteroclinics, Heteroclinic, HeteroclinicPair, Window};
pub use holonomy::{holonomy, holonomy_via, nearest_frame_on, HolonomyStep, Leg};
pub use leaves::{shadow_steps, su_leg, SuLeg, LEAF_RESIDUAL};
