//! Elements of PSL(2,R) stored as sign-canonical 2x2 matrices.

use std::fmt;
use std::ops::Mul;

use crate::error::{Error, Result};

/// A point of PSL(2,R), i.e. the unit tangent bundle of the hyperbolic plane.
///
/// Stored as `[[a, b], [c, d]]` with determinant renormalised to 1 and the
/// sign fixed by [`GroupElement::canonical`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// A traceless 2x2 matrix `[[h, p], [q, -h]]` in the Lie algebra sl(2,R).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Algebra {
    pub h: f64,
    pub p: f64,
    pub q: f64,
}

impl Algebra {
    /// Coordinates in the invariant basis (unstable, stable, centre):
    /// `q` multiplies the lower nilpotent, `p` the upper one and `2h` the
    /// flow generator `H/2`.
    pub fn body(&self) -> [f64; 3] {
        [self.q, self.p, 2.0 * self.h]
    }

    pub fn from_body(u: f64, s: f64, c: f64) -> Self {
        Algebra {
            h: 0.5 * c,
            p: s,
            q: u,
        }
    }

    /// Left-invariant norm in which the flow, the stable and the unstable
    /// generators are orthonormal.
    pub fn norm(&self) -> f64 {
        let [u, s, c] = self.body();
        (u * u + s * s + c * c).sqrt()
    }

    pub fn exp(&self) -> GroupElement {
        let det = -(self.h * self.h + self.p * self.q);
        // X^2 = -det(X) I, so exp X = C(det) I + S(det) X.
        let (cf, sf) = if det < -1e-12 {
            let k = (-det).sqrt();
            (k.cosh(), k.sinh() / k)
        } else if det > 1e-12 {
            let k = det.sqrt();
            (k.cos(), k.sin() / k)
        } else {
            (1.0 - 0.5 * det, 1.0 - det / 6.0)
        };
        GroupElement::new(
            cf + sf * self.h,
            sf * self.p,
            sf * self.q,
            cf - sf * self.h,
        )
    }
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds an element from raw entries, renormalising the determinant.
    ///
    /// Panics on a non-positive determinant; use [`GroupElement::try_new`]
    /// for untrusted input.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::try_new(a, b, c, d).expect("matrix with positive determinant")
    }

    pub fn try_new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::InvalidElement(det));
        }
        let s = det.sqrt().recip();
        Ok(GroupElement {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        }
        .canonical())
    }

    /// Chooses the representative of `{M, -M}` with positive trace; ties are
    /// broken by the first nonzero entry of `(c, a, b)`.
    pub fn canonical(self) -> Self {
        let tr = self.a + self.d;
        let flip = if tr.abs() > 1e-14 {
            tr < 0.0
        } else if self.c != 0.0 {
            self.c < 0.0
        } else if self.a != 0.0 {
            self.a < 0.0
        } else {
            self.b < 0.0
        };
        if flip {
            GroupElement {
                a: -self.a,
                b: -self.b,
                c: -self.c,
                d: -self.d,
            }
        } else {
            self
        }
    }

    /// Determinant by Kahan's fused two-product, accurate even when the
    /// entries are large and `ad` and `bc` nearly cancel.
    pub fn det(&self) -> f64 {
        let w = self.b * self.c;
        let e = (-self.b).mul_add(self.c, w);
        let f = self.a.mul_add(self.d, -w);
        f + e
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Self {
        GroupElement {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .canonical()
    }

    /// The geodesic flow element `diag(e^{t/2}, e^{-t/2})`.
    pub fn flow(t: f64) -> Self {
        let e = (0.5 * t).exp();
        GroupElement {
            a: e,
            b: 0.0,
            c: 0.0,
            d: e.recip(),
        }
    }

    /// Upper unipotent `[[1, r], [0, 1]]`; right multiplication moves along a
    /// stable horocycle.
    pub fn upper(r: f64) -> Self {
        GroupElement {
            a: 1.0,
            b: r,
            c: 0.0,
            d: 1.0,
        }
    }

    /// Lower unipotent `[[1, 0], [r, 1]]`; right multiplication moves along an
    /// unstable horocycle.
    pub fn lower(r: f64) -> Self {
        GroupElement {
            a: 1.0,
            b: 0.0,
            c: r,
            d: 1.0,
        }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        GroupElement {
            a: c,
            b: s,
            c: -s,
            d: c,
        }
        .canonical()
    }

    /// Product without determinant renormalisation, for inner loops that
    /// renormalise once at the end.
    #[inline]
    pub fn mul_raw(&self, o: &Self) -> Self {
        GroupElement {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn renormalized(self) -> Self {
        let det = self.det();
        let s = det.sqrt().recip();
        GroupElement {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
        .canonical()
    }

    /// Moebius action on the upper half-plane, `z = (x, y)` with `y > 0`.
    #[inline]
    pub fn act(&self, z: (f64, f64)) -> (f64, f64) {
        let (x, y) = z;
        // (a z + b) / (c z + d)
        let nr = self.a * x + self.b;
        let ni = self.a * y;
        let dr = self.c * x + self.d;
        let di = self.c * y;
        let den = dr * dr + di * di;
        ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
    }

    /// Image of `i` under the Moebius action: the base point of the frame.
    #[inline]
    pub fn base_point(&self) -> (f64, f64) {
        let den = self.c * self.c + self.d * self.d;
        ((self.a * self.c + self.b * self.d) / den, 1.0 / den)
    }

    /// Matrix logarithm of the canonical representative.
    ///
    /// Defined for hyperbolic, parabolic and elliptic elements with positive
    /// trace; `None` when the trace is `<= -2` after canonicalisation, which
    /// cannot happen for a canonical element.
    pub fn log(&self) -> Option<Algebra> {
        let m = self.canonical();
        let c = 0.5 * m.trace();
        let f = if c > 1.0 + 1e-8 {
            c.acosh() / (c * c - 1.0).sqrt()
        } else if c < 1.0 - 1e-8 {
            if c <= -1.0 {
                return None;
            }
            c.acos() / (1.0 - c * c).sqrt()
        } else {
            // Series of acosh(c)/sqrt(c^2-1) around c = 1.
            1.0 - (c - 1.0) / 3.0
        };
        Some(Algebra {
            h: f * 0.5 * (m.a - m.d),
            p: f * m.b,
            q: f * m.c,
        })
    }

    /// Left-invariant distance from the identity, `|log g|`.
    pub fn log_norm(&self) -> f64 {
        self.log().map_or(f64::INFINITY, |x| x.norm())
    }

    /// Compares up to sign with an absolute tolerance on entries.
    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        let same = (self.a - o.a).abs() <= tol
            && (self.b - o.b).abs() <= tol
            && (self.c - o.c).abs() <= tol
            && (self.d - o.d).abs() <= tol;
        let opp = (self.a + o.a).abs() <= tol
            && (self.b + o.b).abs() <= tol
            && (self.c + o.c).abs() <= tol
            && (self.d + o.d).abs() <= tol;
        same || opp
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// `|tr|/2 > 1`, with a small tolerance.
    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0 + 1e-9
    }

    /// Translation length `2 acosh(|tr|/2)` of a hyperbolic element.
    pub fn translation_length(&self) -> f64 {
        2.0 * (0.5 * self.trace().abs()).max(1.0).acosh()
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, o: GroupElement) -> GroupElement {
        self.mul_raw(&o).renormalized()
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;
    fn mul(self, o: &GroupElement) -> GroupElement {
        self.mul_raw(o).renormalized()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Hyperbolic distance between two points of the upper half-plane.
#[inline]
pub fn hyperbolic_distance(z: (f64, f64), w: (f64, f64)) -> f64 {
    let dx = z.0 - w.0;
    let dy = z.1 - w.1;
    let arg = 1.0 + (dx * dx + dy * dy) / (2.0 * z.1 * w.1);
    arg.max(1.0).acosh()
}

/// Monotone surrogate for the distance from `z` to `i`, cheaper than the
/// distance itself: `|z - i|^2 / Im z`.
#[inline]
pub(crate) fn distance_key_to_i(z: (f64, f64)) -> f64 {
    let dy = z.1 - 1.0;
    (z.0 * z.0 + dy * dy) / z.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_and_horocycle_logs_have_unit_speed() {
        assert!((GroupElement::flow(0.7).log_norm() - 0.7).abs() < 1e-14);
        assert!((GroupElement::upper(0.3).log_norm() - 0.3).abs() < 1e-14);
        assert!((GroupElement::lower(-0.2).log_norm() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn exp_inverts_log() {
        let g = GroupElement::new(1.3, 0.4, -0.2, 0.7);
        let back = g.log().unwrap().exp();
        assert!(back.approx_eq(&g, 1e-12));
        let r = GroupElement::rotation(0.9);
        assert!(r.log().unwrap().exp().approx_eq(&r, 1e-12));
    }

    #[test]
    fn base_point_matches_action_on_i() {
        let g = GroupElement::new(2.0, 1.0, 0.5, 0.75);
        let (x, y) = g.act((0.0, 1.0));
        let (bx, by) = g.base_point();
        assert!((x - bx).abs() < 1e-14 && (y - by).abs() < 1e-14);
    }
}
