//! Stable and unstable leaves of the perturbed maps by shadowing.
//!
//! A leg starts at `w` and ends over the horocycle point `w.surf * n(r)`.
//! Outside the supports of the perturbations the leaves of every map are
//! horocycles times a constant `z`; inside, only the interval coordinate of
//! the endpoint has to be found. It is fixed by bisection so that the orbit
//! of the endpoint (forward for stable legs, backward for unstable ones)
//! merges with the orbit of `w`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::HorocycleKind;
use crate::perturb::{MapKind, System};
use crate::product::ProductPoint;

/// Orbit separation accepted at the end of the shadowing window.
pub const LEAF_RESIDUAL: f64 = 1e-7;
/// Minimum shadowing length.
pub const MIN_SHADOW_STEPS: usize = 30;
/// Rounding error injected per step into each shadowing orbit; it grows at
/// the rate `e^{delta}` while the true separation decays at `e^{-delta}`.
const STEP_ROUNDING: f64 = 2e-16;
const MAX_BISECTIONS: usize = 200;

/// A computed leg.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuLeg {
    #[serde(serialize_with = "kind_name")]
    pub kind: HorocycleKind,
    pub param: f64,
    #[serde(skip)]
    pub start: ProductPoint,
    #[serde(skip)]
    pub end: ProductPoint,
    pub z_start: f64,
    pub z_end: f64,
    pub steps: usize,
    pub residual: f64,
    /// Whether either shadowing orbit met a perturbation support.
    pub touched: bool,
}

fn kind_name<S: serde::Serializer>(k: &HorocycleKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match k {
        HorocycleKind::Stable => "stable",
        HorocycleKind::Unstable => "unstable",
    })
}

/// Shadowing length for a leg of parameter `r`: the step count at which
/// the decaying separation `r e^{-n delta}` meets the growing rounding
/// error, so that their sum is smallest.
pub fn shadow_steps(r: f64, delta: f64) -> usize {
    let n = ((r.abs() / STEP_ROUNDING).ln() / (2.0 * delta)).round();
    if n.is_finite() {
        (n.max(0.0) as usize).max(MIN_SHADOW_STEPS)
    } else {
        MIN_SHADOW_STEPS
    }
}

struct Shadow {
    z_gap: f64,
    residual: f64,
    touched: bool,
}

fn shadow(sys: &System, map: MapKind, a: &ProductPoint, b: &ProductPoint, n: usize, forward: bool) -> Result<Shadow> {
    let step = |w: &ProductPoint, k: MapKind| {
        if forward {
            sys.step(k, w)
        } else {
            sys.step_inverse(k, w)
        }
    };
    let (mut a, mut b) = (*a, *b);
    let mut touched = false;
    for _ in 0..n {
        let na = step(&a, map)?;
        let nb = step(&b, map)?;
        if !touched && map != MapKind::S {
            touched = na != step(&a, MapKind::S)? || nb != step(&b, MapKind::S)?;
        }
        a = na;
        b = nb;
    }
    let d = a.body_delta(&b);
    Ok(Shadow {
        z_gap: d[3],
        residual: d.iter().map(|x| x * x).sum::<f64>().sqrt(),
        touched,
    })
}

/// The point over `w.surf * n(r)` on the `kind` leaf of `w` for `map`.
pub fn su_leg(sys: &System, map: MapKind, w: &ProductPoint, kind: HorocycleKind, r: f64) -> Result<SuLeg> {
    let mut leg = SuLeg {
        kind,
        param: r,
        start: *w,
        end: *w,
        z_start: w.z,
        z_end: w.z,
        steps: 0,
        residual: 0.0,
        touched: false,
    };
    if r == 0.0 {
        return Ok(leg);
    }
    let surf = w.surf.horocycle(r, kind)?;
    let forward = kind == HorocycleKind::Stable;
    let n = shadow_steps(r, sys.delta);
    leg.steps = n;
    let at = |z: f64| shadow(sys, map, w, &ProductPoint::new(surf, z), n, forward);

    let first = at(w.z)?;
    leg.touched = first.touched;
    if !first.touched {
        leg.end = ProductPoint::new(surf, w.z);
        leg.residual = first.residual;
        return finish(leg);
    }
    if first.z_gap == 0.0 {
        leg.end = ProductPoint::new(surf, w.z);
        leg.residual = first.residual;
        return finish(leg);
    }

    // bracket the root of the final z gap, then bisect
    let sign = first.z_gap.signum();
    let (mut lo, mut hi) = (w.z, w.z);
    let mut h = first.z_gap.abs().max(1e-12);
    let mut bracketed = false;
    for _ in 0..60 {
        let trial = (w.z - sign * h).clamp(1e-12, 1.0 - 1e-12);
        let s = at(trial)?;
        if s.z_gap.signum() != sign {
            if trial < w.z {
                lo = trial;
            } else {
                hi = trial;
            }
            bracketed = true;
            break;
        }
        if trial <= 1e-12 || trial >= 1.0 - 1e-12 {
            break;
        }
        h *= 2.0;
    }
    if !bracketed {
        return Err(Error::NoConvergence("leaf endpoint could not be bracketed".into()));
    }
    let g_lo = at(lo)?.z_gap;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)?.z_gap.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    let last = at(z)?;
    leg.end = ProductPoint::new(surf, z);
    leg.z_end = z;
    leg.residual = last.residual;
    leg.touched = true;
    finish(leg)
}

fn finish(leg: SuLeg) -> Result<SuLeg> {
    if leg.residual < LEAF_RESIDUAL {
        Ok(leg)
    } else {
        Err(Error::NoConvergence(format!(
            "{:?} leg of parameter {:.3e}: residual {:.3e} after {} steps",
            leg.kind, leg.param, leg.residual, leg.steps
        )))
    }
}
