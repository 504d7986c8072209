//! Intersections of horocycles through `p` with the weak leaves of a second
//! closed orbit.

use crate::error::{Error, Result};
use crate::hyperbolic::{surface_group, ClosedOrbit, GroupElement, ShellElement, SurfacePoint};

/// Radius of the deck search used to find heteroclinic points.
pub const HETEROCLINIC_SEARCH_RADIUS: f64 = 9.0;

/// A point `q` on a horocycle through `p` lying on the opposite horocycle of
/// a point `p'` on another closed orbit.
#[derive(Clone, Copy, Debug)]
pub struct Heteroclinic {
    /// Lift of `q` adjacent to the reduced representative of `p`.
    pub q_lift: GroupElement,
    pub q: SurfacePoint,
    /// Horocycle parameter from `p` to `q`.
    pub from_p: f64,
    /// Lift of the orbit point `p'`; `q = p' * horocycle(leaf)`.
    pub target_lift: GroupElement,
    pub target: SurfacePoint,
    /// Horocycle parameter from `p'` to `q`.
    pub leaf: f64,
    /// Flow time of `p'` from the base point of its orbit, in `[0, length)`.
    pub orbit_time: f64,
    /// Smallest `n > 0` with `|leaf| e^{-n delta} <= eps0`.
    pub n: usize,
}

/// The pair of heteroclinic points of the accessibility loop.
#[derive(Clone, Copy, Debug)]
pub struct HeteroclinicPair {
    /// On the unstable horocycle of `p`, on the stable horocycle of `p1`.
    pub q1: Heteroclinic,
    /// On the stable horocycle of `p`, on the unstable horocycle of `p2`.
    pub q2: Heteroclinic,
}

/// Selection window for the horocycle parameter from `p`.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub min: f64,
    pub max: f64,
}

fn deck_shell() -> &'static [ShellElement] {
    use std::sync::OnceLock;
    static SHELL: OnceLock<Vec<ShellElement>> = OnceLock::new();
    SHELL.get_or_init(|| surface_group().elements_within(HETEROCLINIC_SEARCH_RADIUS))
}

fn smallest_n(leaf: f64, delta: f64, eps0: f64) -> usize {
    let n = ((leaf.abs() / eps0).ln() / delta).ceil();
    (n.max(1.0)) as usize
}

/// All unstable-horocycle intersections `q = p lower(x)` with stable
/// horocycles of points of `orbit`, for `x` in the window.
pub fn unstable_candidates(
    p: &SurfacePoint,
    orbit: &ClosedOrbit,
    window: Window,
    delta: f64,
    eps0: f64,
) -> Vec<Heteroclinic> {
    let pl = *p.rep();
    let mut out = Vec::new();
    for sh in deck_shell() {
        let frame = sh.element.mul_raw(orbit.lift()).renormalized();
        let mut m = frame.inverse().mul_raw(&pl);
        if m.d < 0.0 {
            m = GroupElement { a: -m.a, b: -m.b, c: -m.c, d: -m.d };
        }
        if m.d.abs() < 1e-12 {
            continue;
        }
        let x = -m.c / m.d;
        if x.abs() < window.min || x.abs() > window.max {
            continue;
        }
        // m lower(x) = flow(s) upper(y) with e^{-s/2} = m.d
        let s = -2.0 * m.d.ln();
        let y = m.b * m.d;
        let target_lift = frame.mul_raw(&GroupElement::flow(s)).renormalized();
        let q_lift = pl.mul_raw(&GroupElement::lower(x)).renormalized();
        let (Ok(q), Ok(target)) = (SurfacePoint::from_lift(&q_lift), SurfacePoint::from_lift(&target_lift)) else {
            continue;
        };
        out.push(Heteroclinic {
            q_lift,
            q,
            from_p: x,
            target_lift,
            target,
            leaf: y,
            orbit_time: s.rem_euclid(orbit.length()),
            n: smallest_n(y, delta, eps0),
        });
    }
    out
}

/// All stable-horocycle intersections `q = p upper(y)` with unstable
/// horocycles of points of `orbit`.
pub fn stable_candidates(
    p: &SurfacePoint,
    orbit: &ClosedOrbit,
    window: Window,
    delta: f64,
    eps0: f64,
) -> Vec<Heteroclinic> {
    let pl = *p.rep();
    let mut out = Vec::new();
    for sh in deck_shell() {
        let frame = sh.element.mul_raw(orbit.lift()).renormalized();
        let mut m = frame.inverse().mul_raw(&pl);
        if m.a < 0.0 {
            m = GroupElement { a: -m.a, b: -m.b, c: -m.c, d: -m.d };
        }
        if m.a.abs() < 1e-12 {
            continue;
        }
        let y = -m.b / m.a;
        if y.abs() < window.min || y.abs() > window.max {
            continue;
        }
        // m upper(y) = flow(s) lower(x) with e^{s/2} = m.a
        let s = 2.0 * m.a.ln();
        let x = m.c * m.a;
        let target_lift = frame.mul_raw(&GroupElement::flow(s)).renormalized();
        let q_lift = pl.mul_raw(&GroupElement::upper(y)).renormalized();
        let (Ok(q), Ok(target)) = (SurfacePoint::from_lift(&q_lift), SurfacePoint::from_lift(&target_lift)) else {
            continue;
        };
        out.push(Heteroclinic {
            q_lift,
            q,
            from_p: y,
            target_lift,
            target,
            leaf: x,
            orbit_time: s.rem_euclid(orbit.length()),
            n: smallest_n(x, delta, eps0),
        });
    }
    out
}

/// Picks, for each horocycle through `p`, the candidate with the smallest
/// `n` (ties broken by the smaller leaf parameter).
pub fn find_heteroclinics(
    p: &SurfacePoint,
    orbit: &ClosedOrbit,
    unstable_window: Window,
    stable_window: Window,
    delta: f64,
    eps0: f64,
) -> Result<HeteroclinicPair> {
    let pick = |mut v: Vec<Heteroclinic>| {
        v.sort_by(|a, b| a.n.cmp(&b.n).then(a.leaf.abs().total_cmp(&b.leaf.abs())));
        v.into_iter().next()
    };
    let q1 = pick(unstable_candidates(p, orbit, unstable_window, delta, eps0))
        .ok_or_else(|| Error::Construction("no unstable heteroclinic point in window".into()))?;
    let q2 = pick(stable_candidates(p, orbit, stable_window, delta, eps0))
        .ok_or_else(|| Error::Construction("no stable heteroclinic point in window".into()))?;
    Ok(HeteroclinicPair { q1, q2 })
}
