//! The bump-function suite and the three volume-preserving perturbations.

pub mod bumps;
pub mod config;
pub mod h1;
pub mod h2;
pub mod h3;
pub mod system;

pub use bumps::BumpSuite;
pub use config::PerturbationConfig;
pub use h1::H1;
pub use h2::H2;
pub use h3::{Box4, BoxFamily};
pub use system::{MapKind, OrbitData, OverlapReport, System};
