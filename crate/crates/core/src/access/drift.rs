//! The accessibility loop `p -> q1 -> p1 ~> p2 -> q2 -> p` and the drift of
//! the interval coordinate along it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{GroupElement, HorocycleKind, SurfacePoint};
use crate::perturb::{MapKind, System};
use crate::product::ProductPoint;

use super::holonomy::{holonomy, holonomy_via};
use super::leaves::{su_leg, SuLeg};

/// Number of holonomy steps of the middle segment whose legs are tested
/// against the perturbation supports.
const MIDDLE_CHECKS: u64 = 1000;

/// The chained holonomies carrying `p1` to `p2` along `C'`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MiddleSegment {
    /// Signed flow time from `p1` to `p2` covered by the chain.
    pub gap: f64,
    /// Displacement of one holonomy through `C_eps`.
    pub step_displacement: f64,
    pub full_steps: u64,
    /// Displacement of the closing holonomy.
    pub closing_displacement: f64,
    /// Holonomies whose leg vertices were tested against the supports.
    pub checked_steps: u64,
    pub support_hits: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub map: String,
    /// `z0, ..., z5`.
    pub z: [f64; 6],
    /// Interval coordinate of `h1^{-ell}(p, z0)`.
    pub bound_rhs: f64,
    pub ell: usize,
    pub legs: Vec<SuLeg>,
    pub middle: MiddleSegment,
    pub legs_ok: bool,
}

impl DriftReport {
    pub fn drift(&self) -> f64 {
        self.z[0] - self.z[5]
    }
}

/// `h1^{-k}(p, z0)`.
pub fn h1_backward_bound(sys: &System, z0: f64, k: usize) -> Result<f64> {
    let mut w = sys.anchor(z0);
    for _ in 0..k {
        w = sys.h1.apply(&w, -1.0)?;
    }
    Ok(w.z)
}

/// Runs the loop for `map` starting at `(p, z0)`.
pub fn accessibility_drift(sys: &System, map: MapKind, z0: f64) -> Result<DriftReport> {
    if !(z0 > 0.0 && z0 < 1.0) {
        return Err(Error::InvalidConfig(format!("z0 = {z0} is not in (0, 1)")));
    }
    let o = &sys.orbit;
    let (q1, q2) = (o.hetero.q1, o.hetero.q2);
    let label = |e: Error, leg: &str| match e {
        Error::NoConvergence(m) => Error::NoConvergence(format!("{leg}: {m}")),
        e => e,
    };

    let w0 = sys.anchor(z0);
    let l1 = su_leg(sys, map, &w0, HorocycleKind::Unstable, q1.from_p).map_err(|e| label(e, "p -> q1"))?;
    let l2 = su_leg(sys, map, &l1.end, HorocycleKind::Stable, -q1.leaf).map_err(|e| label(e, "q1 -> p1"))?;

    let z3 = l2.end.z;
    let middle = middle_segment(sys, q1.orbit_time, q2.orbit_time, z3)?;
    let p2 = SurfacePoint::from_lift(&(*o.c_prime.lift() * GroupElement::flow(q2.orbit_time)))?;

    let l4 = su_leg(sys, map, &ProductPoint::new(p2, z3), HorocycleKind::Unstable, q2.leaf)
        .map_err(|e| label(e, "p2 -> q2"))?;
    let l5 = su_leg(sys, map, &l4.end, HorocycleKind::Stable, -q2.from_p).map_err(|e| label(e, "q2 -> p"))?;

    Ok(DriftReport {
        map: map.name().into(),
        z: [z0, l1.end.z, l2.end.z, z3, l4.end.z, l5.end.z],
        bound_rhs: h1_backward_bound(sys, z0, o.ell)?,
        ell: o.ell,
        legs: vec![l1, l2, l4, l5],
        legs_ok: middle.support_hits == 0,
        middle,
    })
}

/// Chains holonomies through `C_eps` from the point of `C'` at flow time
/// `t1` to the one at `t2`, moving in the direction of the holonomy
/// displacement, and closes with one holonomy through an interpolated
/// frame. The legs of all holonomies are translates of each other along the
/// flow, so only a sample of them is tested against the supports at `z`.
pub fn middle_segment(sys: &System, t1: f64, t2: f64, z: f64) -> Result<MiddleSegment> {
    let o = &sys.orbit;
    let len = o.c_prime.length();
    let x0 = *o.c_prime.lift() * GroupElement::flow(t1);
    let h = holonomy(&x0, &o.c_eps)?;
    let d = h.displacement;
    if d == 0.0 {
        return Err(Error::Singular("holonomy displacement vanishes"));
    }
    let gap = if d > 0.0 { (t2 - t1).rem_euclid(len) } else { -(t1 - t2).rem_euclid(len) };
    let full = (gap / d).floor().max(0.0) as u64;
    let rem = gap - full as f64 * d;

    let mut hits = 0;
    let stride = (full / MIDDLE_CHECKS).max(1);
    let mut checked = 0;
    let mut k = 0;
    while k < full {
        let g = GroupElement::flow(k as f64 * d);
        hits += leg_hits(sys, &holonomy_via(&(x0 * g), &(h.via * g))?, z)?;
        checked += 1;
        k += stride;
    }

    // closing holonomy through x0' exp(lambda log(x0'^-1 via')), whose
    // displacement grows from 0 at lambda = 0 to d at lambda = 1
    let g = GroupElement::flow(full as f64 * d);
    let start = x0 * g;
    let via = h.via * g;
    let rel = start.inverse() * via;
    let log = rel.log().ok_or(Error::Singular("holonomy frame too far for interpolation"))?;
    let frame = |lam: f64| {
        let a = crate::hyperbolic::Algebra { h: lam * log.h, p: lam * log.p, q: lam * log.q };
        start * a.exp()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let dm = holonomy_via(&start, &frame(mid))?.displacement;
        if dm.abs() < rem.abs() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let closing = holonomy_via(&start, &frame(0.5 * (lo + hi)))?;
    hits += leg_hits(sys, &closing, z)?;
    checked += 1;

    Ok(MiddleSegment {
        gap,
        step_displacement: d,
        full_steps: full,
        closing_displacement: closing.displacement,
        checked_steps: checked,
        support_hits: hits,
    })
}

/// Number of leg vertices and leg midpoints of one holonomy lying in a
/// perturbation support at interval coordinate `z`.
fn leg_hits(sys: &System, step: &super::holonomy::HolonomyStep, z: f64) -> Result<u64> {
    let mut x = step.end * GroupElement::flow(-step.displacement);
    let mut hits = 0;
    for leg in &step.legs {
        for frac in [0.5, 1.0] {
            let n = match leg.kind {
                HorocycleKind::Stable => GroupElement::upper(frac * leg.param),
                HorocycleKind::Unstable => GroupElement::lower(frac * leg.param),
            };
            let w = ProductPoint::new(SurfacePoint::from_lift(&(x * n))?, z);
            if sys.in_h1_support(&w) || sys.in_h2_support(&w) || sys.in_box(&w) {
                hits += 1;
            }
        }
        x = match leg.kind {
            HorocycleKind::Stable => x * GroupElement::upper(leg.param),
            HorocycleKind::Unstable => x * GroupElement::lower(leg.param),
        };
    }
    Ok(hits)
}
