//! Closed geodesics given by words in the generators, distances to them, and
//! the shadowing orbits used for holonomy.

use super::element::{GroupElement, hyperbolic_distance};
use super::fuchsian::surface_group;
use super::surface::SurfacePoint;
use crate::error::{Error, Result};

/// Longest stretch of orbit handled as a single segment in distance
/// searches.
const SEGMENT: f64 = 1.5;

#[derive(Clone, Debug)]
pub struct ClosedOrbit {
    word: Vec<usize>,
    element: GroupElement,
    length: f64,
    /// Frame on the translation axis with `element * lift = lift * flow(length)`.
    lift: GroupElement,
    base: SurfacePoint,
}

impl ClosedOrbit {
    /// Closed orbit of the hyperbolic element given by `word`.
    pub fn from_word(word: &[usize]) -> Result<Self> {
        let element = surface_group().word(word);
        Self::from_element(word.to_vec(), element)
    }

    fn from_element(word: Vec<usize>, element: GroupElement) -> Result<Self> {
        if !element.is_hyperbolic() {
            return Err(Error::NotHyperbolic(element.trace().abs()));
        }
        let lift = axis_frame(&element);
        let base = SurfacePoint::from_lift(&lift)?;
        Ok(ClosedOrbit {
            word,
            length: element.translation_length(),
            element,
            lift,
            base,
        })
    }

    pub fn word(&self) -> &[usize] {
        &self.word
    }

    pub fn element(&self) -> &GroupElement {
        &self.element
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn lift(&self) -> &GroupElement {
        &self.lift
    }

    pub fn base_point(&self) -> SurfacePoint {
        self.base
    }

    /// Point at flow time `s` from the base point.
    pub fn point_at(&self, s: f64) -> Result<SurfacePoint> {
        SurfacePoint::from_lift(&(self.lift * GroupElement::flow(s)))
    }

    /// Distance in `T^1 M0` from `x` to the orbit.
    pub fn distance_to(&self, x: &SurfacePoint) -> f64 {
        let nseg = (self.length / SEGMENT).ceil().max(1.0) as usize;
        let seg = self.length / nseg as f64;
        let mut best = f64::INFINITY;
        for j in 0..nseg {
            let start = self.lift * GroupElement::flow(j as f64 * seg);
            let Ok(start) = SurfacePoint::from_lift(&start) else {
                continue;
            };
            best = best.min(segment_distance(x.rep(), start.rep(), seg, best));
        }
        best
    }

    /// Orbit close to `self` over `k` periods: the axis of `w^k w*` where
    /// `w` is the word of `self` and `w*` the companion word.
    ///
    /// The lift is conjugated by `w^(k/2)` so that its long stretch near the
    /// axis of `w` is centred on the lift of `self`.
    pub fn approximating(&self, k: usize, companion: &[usize]) -> Result<ClosedOrbit> {
        let mut word = Vec::with_capacity(k * self.word.len() + companion.len());
        for _ in 0..k {
            word.extend_from_slice(&self.word);
        }
        word.extend_from_slice(companion);
        let group = surface_group();
        let h = group.word(&word);
        let mut orbit = Self::from_element(word, h)?;
        let back = power(&self.element.inverse(), k / 2);
        orbit.lift = back * orbit.lift;
        // The conjugate has entries far larger than its determinant, so it is
        // rebuilt from the frame without determinant renormalisation.
        orbit.element = orbit
            .lift
            .mul_raw(&GroupElement::flow(orbit.length))
            .mul_raw(&orbit.lift.inverse())
            .canonical();
        Ok(orbit)
    }

    /// Smallest distance from `other` to points of `self`, sampled at `n`
    /// equally spaced points.
    pub fn min_distance_to(&self, other: &ClosedOrbit, n: usize) -> Result<f64> {
        let mut best = f64::INFINITY;
        for i in 0..n {
            let x = self.point_at(self.length * i as f64 / n as f64)?;
            best = best.min(other.distance_to(&x));
        }
        Ok(best)
    }

    /// One-sided Hausdorff distance `sup_{x in self} d(x, other)` sampled at
    /// `n` equally spaced points of `self`.
    pub fn hausdorff_to(&self, other: &ClosedOrbit, n: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let x = self.point_at(self.length * i as f64 / n as f64)?;
            worst = worst.max(other.distance_to(&x));
        }
        Ok(worst)
    }
}

/// Default companion word for approximating orbits of a word starting with
/// generator `g`: `g` followed by the next generator, which is neither `g`
/// nor its inverse.
pub fn default_companion(word: &[usize]) -> Vec<usize> {
    let g = word.first().copied().unwrap_or(0);
    vec![g, (g + 1) % 8]
}

fn power(g: &GroupElement, k: usize) -> GroupElement {
    (0..k).fold(GroupElement::IDENTITY, |acc, _| acc * *g)
}

/// Frame `b` with `b^-1 h b = flow(length)`.
pub fn axis_frame(h: &GroupElement) -> GroupElement {
    let h = h.canonical();
    let tr = h.trace();
    let disc = (tr * tr - 4.0).max(0.0).sqrt();
    let lam = 0.5 * (tr + disc);
    let eig = |l: f64| {
        let v1 = (h.b, l - h.a);
        let v2 = (l - h.d, h.c);
        if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) {
            v1
        } else {
            v2
        }
    };
    let v = eig(lam);
    let mut w = eig(lam.recip());
    let mut det = v.0 * w.1 - w.0 * v.1;
    if det < 0.0 {
        w = (-w.0, -w.1);
        det = -det;
    }
    let s = det.sqrt().recip();
    GroupElement::new(v.0 * s, w.0 * s, v.1 * s, w.1 * s)
}

/// Distance from reduced frame `x` to the flow segment `start * flow([0, len])`,
/// ignoring lifts whose base-point bound already exceeds `cutoff`.
fn segment_distance(x: &GroupElement, start: &GroupElement, len: f64, cutoff: f64) -> f64 {
    let group = surface_group();
    let xz = x.base_point();
    let rx = hyperbolic_distance((0.0, 1.0), xz);
    let rs = hyperbolic_distance((0.0, 1.0), start.base_point());
    let xinv = x.inverse();
    let mut best = cutoff;
    for sh in group.shell() {
        if sh.displacement - rx - rs - len > std::f64::consts::SQRT_2 * best {
            break;
        }
        let frame = sh.element.mul_raw(start).renormalized();
        // Base point of x seen from the frame: the segment runs up the
        // imaginary axis from i to i e^len.
        let w = frame.inverse().act(xz);
        let r = w.0.hypot(w.1);
        let foot = r.ln().clamp(0.0, len);
        let line_dist = hyperbolic_distance(w, (0.0, foot.exp()));
        if line_dist > std::f64::consts::SQRT_2 * best {
            continue;
        }
        let f = |s: f64| {
            xinv.mul_raw(&frame)
                .mul_raw(&GroupElement::flow(s))
                .renormalized()
                .log_norm()
        };
        let (lo, hi) = ((foot - 1.0).max(0.0), (foot + 1.0).min(len));
        let d = golden_min(f, lo, hi, 1e-10).min(f(0.0)).min(f(len));
        best = best.min(d);
    }
    best
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    fa.min(fb)
}
