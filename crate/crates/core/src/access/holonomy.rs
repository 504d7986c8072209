//! The four-leg holonomy between two nearby closed orbits.

use crate::error::{Error, Result};
use crate::hyperbolic::{golden_min, surface_group, ClosedOrbit, GroupElement, HorocycleKind};

/// One horocycle leg of an su-path in the universal cover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub kind: HorocycleKind,
    pub param: f64,
}

/// Result of a holonomy: the returned frame, its flow displacement from the
/// start, and the four legs taken.
#[derive(Clone, Debug)]
pub struct HolonomyStep {
    pub end: GroupElement,
    pub displacement: f64,
    pub legs: [Leg; 4],
    /// The auxiliary frame on the nearby orbit.
    pub via: GroupElement,
}

fn checked(den: f64) -> Result<f64> {
    if den.abs() < 1e-12 {
        Err(Error::Singular("holonomy factorisation denominator"))
    } else {
        Ok(den)
    }
}

/// Holonomy of the lift `x0` through the frame `x` on a nearby flow line:
///
/// 1. `x1` on the stable horocycle of `x0` and the weak-unstable leaf of `x`;
/// 2. `x2` on the unstable horocycle of `x1` and the weak-stable leaf of `x`;
/// 3. `x3` on the stable horocycle of `x2` and the weak-unstable leaf of `x0`;
/// 4. `x4` on the unstable horocycle of `x3` and the weak-stable leaf of `x0`,
///    hence on the flow line of `x0`.
pub fn holonomy_via(x0: &GroupElement, x: &GroupElement) -> Result<HolonomyStep> {
    let xinv = x.inverse();
    let x0inv = x0.inverse();

    let m = xinv.mul_raw(x0);
    let s1 = -m.b / checked(m.a)?;
    let x1 = x0.mul_raw(&GroupElement::upper(s1)).renormalized();

    let m = xinv.mul_raw(&x1);
    let r1 = -m.c / checked(m.d)?;
    let x2 = x1.mul_raw(&GroupElement::lower(r1)).renormalized();

    let m = x0inv.mul_raw(&x2);
    let s2 = -m.b / checked(m.a)?;
    let x3 = x2.mul_raw(&GroupElement::upper(s2)).renormalized();

    let m = x0inv.mul_raw(&x3);
    let r2 = -m.c / checked(m.d)?;

    // x4 = x0 upper(s1) lower(r1) upper(s2) lower(r2) = x0 flow(D). The
    // top-left entry of the unipotent product, expanded in the leg
    // parameters, keeps its relative accuracy when the loop is tiny.
    let a_minus_one = s1 * r1 + r2 * (s1 + s2 + s1 * r1 * s2);
    checked(1.0 + a_minus_one)?;
    let displacement = 2.0 * a_minus_one.ln_1p();
    Ok(HolonomyStep {
        end: x0.mul_raw(&GroupElement::flow(displacement)).renormalized(),
        displacement,
        legs: [
            Leg { kind: HorocycleKind::Stable, param: s1 },
            Leg { kind: HorocycleKind::Unstable, param: r1 },
            Leg { kind: HorocycleKind::Stable, param: s2 },
            Leg { kind: HorocycleKind::Unstable, param: r2 },
        ],
        via: *x,
    })
}

/// Frame on a lift of `orbit` nearest to the lift `x0`.
pub fn nearest_frame_on(orbit: &ClosedOrbit, x0: &GroupElement) -> GroupElement {
    let group = surface_group();
    let (red, deck) = group.reduce(x0).expect("reduction terminates");
    let deck_inv = deck.inverse();
    let len = orbit.length();
    let nseg = (len / 1.5).ceil().max(1.0) as usize;
    let seg = len / nseg as f64;
    let red_inv = red.inverse();
    let mut best = (f64::INFINITY, GroupElement::IDENTITY);
    for j in 0..nseg {
        let start_lift = orbit.lift().mul_raw(&GroupElement::flow(j as f64 * seg)).renormalized();
        let Ok((start, _)) = group.reduce(&start_lift) else { continue };
        for sh in group.shell().iter().take(400) {
            let frame = sh.element.mul_raw(&start).renormalized();
            let f = |s: f64| {
                red_inv
                    .mul_raw(&frame)
                    .mul_raw(&GroupElement::flow(s))
                    .renormalized()
                    .log_norm()
            };
            let w = frame.inverse().act(red.base_point());
            let foot = w.0.hypot(w.1).ln().clamp(-1.0, seg + 1.0);
            let d = golden_min(f, foot - 1.0, foot + 1.0, 1e-12);
            if d < best.0 {
                // recover the argmin by a second pass
                let s = argmin(&f, foot - 1.0, foot + 1.0);
                best = (d, frame.mul_raw(&GroupElement::flow(s)).renormalized());
            }
        }
    }
    deck_inv.mul_raw(&best.1).renormalized()
}

fn argmin<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while hi - lo > 1e-12 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Holonomy of `x0` (a lift of a point of `c_prime`) through the nearest
/// lift of `c_eps`.
pub fn holonomy(x0: &GroupElement, c_eps: &ClosedOrbit) -> Result<HolonomyStep> {
    let x = nearest_frame_on(c_eps, x0);
    holonomy_via(x0, &x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holonomy_through_own_frame_is_trivial() {
        let x0 = GroupElement::new(1.2, 0.3, 0.1, 0.86);
        let h = holonomy_via(&x0, &x0).unwrap();
        assert!(h.displacement.abs() < 1e-14);
        assert!(h.end.approx_eq(&x0, 1e-14));
    }

    #[test]
    fn holonomy_via_nearby_frame_returns_to_flow_line() {
        let x0 = GroupElement::IDENTITY;
        let x = GroupElement::lower(0.01) * GroupElement::upper(0.02);
        let h = holonomy_via(&x0, &x).unwrap();
        assert!(h.displacement.abs() > 1e-6);
        let d = x0.inverse() * h.end;
        assert!(d.b.abs() < 1e-14 && d.c.abs() < 1e-14);
    }
}
