//! Derivative cocycles: Lyapunov spectra, the expansion integral of the
//! twisted map and the determinant identities.

pub mod expansion;
pub mod invariants;
pub mod lyapunov;

pub use expansion::{
    expansion_integral, expansion_integral_with, expansion_slope_at_zero, log_eta, twisted_only, unstable_slope,
    ExpansionEstimate, SlopeOptions,
};
pub use invariants::{
    c1_distance, fd_jacobian, sample_points, spectral_norm, sum_invariant_check, C1Distance, SampleRegion,
    SumInvariantReport,
};
pub use lyapunov::{lyapunov_spectrum, lyapunov_spectrum_with, LyapunovReport};
