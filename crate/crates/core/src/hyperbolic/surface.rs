//! Points of the unit tangent bundle of the genus-two surface and the
//! geodesic and horocycle flows on it.

use rand::Rng;

use super::element::{hyperbolic_distance, Algebra, GroupElement};
use super::fuchsian::surface_group;
use crate::error::Result;

/// Which horocycle family to move along.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HorocycleKind {
    /// Contracted by the forward geodesic flow: right multiplication by the
    /// upper unipotent.
    Stable,
    /// Expanded by the forward geodesic flow: right multiplication by the
    /// lower unipotent.
    Unstable,
}

/// A point of `T^1 M0`, stored as a representative whose base point lies in
/// the fundamental octagon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    rep: GroupElement,
}

impl SurfacePoint {
    /// Reduces an arbitrary lift.
    pub fn from_lift(g: &GroupElement) -> Result<Self> {
        let (rep, _) = surface_group().reduce(g)?;
        Ok(SurfacePoint { rep })
    }

    /// Wraps an element already known to be reduced.
    pub(crate) fn from_reduced(rep: GroupElement) -> Self {
        SurfacePoint { rep }
    }

    pub fn rep(&self) -> &GroupElement {
        &self.rep
    }

    /// Base point in the upper half-plane.
    pub fn base(&self) -> (f64, f64) {
        self.rep.base_point()
    }

    /// Time-`t` geodesic flow.
    pub fn flow(&self, t: f64) -> Result<Self> {
        Self::from_lift(&(self.rep * GroupElement::flow(t)))
    }

    pub fn horocycle(&self, r: f64, kind: HorocycleKind) -> Result<Self> {
        let n = match kind {
            HorocycleKind::Stable => GroupElement::upper(r),
            HorocycleKind::Unstable => GroupElement::lower(r),
        };
        Self::from_lift(&(self.rep * n))
    }

    /// Moves by `exp(X)` on the right, `X` given in body coordinates
    /// `(unstable, stable, centre)`.
    pub fn displace(&self, body: [f64; 3]) -> Result<Self> {
        let x = Algebra::from_body(body[0], body[1], body[2]).exp();
        Self::from_lift(&(self.rep * x))
    }

    /// Quotient distance: minimum of `|log(p^-1 gamma q)|` over deck
    /// transformations. A bi-Lipschitz surrogate for the Sasaki distance in
    /// which both horocycle flows and the geodesic flow have unit speed.
    pub fn distance(&self, other: &SurfacePoint) -> f64 {
        surface_group().quotient_distance(&self.rep, &other.rep)
    }

    /// Body-frame displacement `log(self^-1 gamma other)` for the nearest
    /// lift of `other`, in `(unstable, stable, centre)` coordinates.
    pub fn body_delta(&self, other: &SurfacePoint) -> [f64; 3] {
        let (_, g) = surface_group().nearest_lift(&self.rep, &other.rep);
        let m = self.rep.inverse().mul_raw(&g).mul_raw(&other.rep).renormalized();
        m.log().map_or([f64::NAN; 3], |a| a.body())
    }

    /// The lift of `self` nearest to the lift `near` in the universal cover.
    pub fn lift_near(&self, near: &GroupElement) -> GroupElement {
        let (_, g) = surface_group().nearest_lift(near, &self.rep);
        g * self.rep
    }

    /// Hyperbolic distance from the base point to the centre of the domain.
    pub fn radius(&self) -> f64 {
        hyperbolic_distance((0.0, 1.0), self.base())
    }

    /// Samples a point uniformly with respect to the Liouville measure.
    ///
    /// The base point is drawn from hyperbolic area restricted to a box in
    /// the upper half-plane containing the domain and accepted when it is
    /// reduced; the direction is uniform.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let group = surface_group();
        let rmax = group.circumradius();
        let umax = rmax.sinh() + 1e-9;
        let (vlo, vhi) = ((-rmax).exp(), rmax.exp());
        loop {
            let u = rng.gen_range(-umax..umax);
            // density proportional to v^-2 on [vlo, vhi]
            let w = rng.gen_range(vhi.recip()..vlo.recip());
            let v = w.recip();
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let g = GroupElement::upper(u)
                .mul_raw(&GroupElement::flow(v.ln()))
                .mul_raw(&GroupElement::rotation(theta))
                .renormalized();
            if group.is_reduced(&g) {
                return SurfacePoint { rep: g };
            }
        }
    }
}
