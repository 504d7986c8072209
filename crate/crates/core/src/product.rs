//! The product system `N = T^1 M0 x [0,1]`, the unperturbed map
//! `S = G x id`, the invariant frame and the local charts in which the
//! perturbations are written.
//!
//! Chart coordinates `(x, y, t, z)` at an anchor `A` describe the frame
//! `A * upper(y) * lower(x) * flow(t)`. With this factorisation order the
//! Haar measure is exactly `dx dy dt`, `d/dx` spans the unstable direction
//! everywhere and `d/dt` is the flow direction.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hyperbolic::{hyperbolic_distance, surface_group, GroupElement, SurfacePoint};

/// Square 4x4 matrix, row-major.
pub type Mat4 = [[f64; 4]; 4];

pub const IDENTITY4: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(a: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, row) in a.iter().enumerate() {
        out[i] = row.iter().zip(v).map(|(x, y)| x * y).sum();
    }
    out
}

/// Determinant of the principal minor on the given index set.
pub fn minor_det(a: &Mat4, idx: &[usize]) -> f64 {
    match idx.len() {
        1 => a[idx[0]][idx[0]],
        2 => a[idx[0]][idx[0]] * a[idx[1]][idx[1]] - a[idx[0]][idx[1]] * a[idx[1]][idx[0]],
        3 => {
            let m = |i: usize, j: usize| a[idx[i]][idx[j]];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        4 => det4(a),
        _ => 1.0,
    }
}

pub fn det4(a: &Mat4) -> f64 {
    let mut m = *a;
    let mut det = 1.0;
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..4 {
            let f = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Frobenius norm of `a - b`.
pub fn frobenius_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let d = a[i][j] - b[i][j];
            s += d * d;
        }
    }
    s.sqrt()
}

/// A point of `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductPoint {
    pub surf: SurfacePoint,
    pub z: f64,
}

impl ProductPoint {
    pub fn new(surf: SurfacePoint, z: f64) -> Self {
        ProductPoint { surf, z }
    }

    /// Uniform sample of the normalised volume on `N`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let surf = SurfacePoint::random(rng);
        ProductPoint {
            surf,
            z: rng.gen_range(0.0..1.0),
        }
    }

    /// Distance on `N`: surface distance plus `|dz|`.
    pub fn distance(&self, other: &ProductPoint) -> f64 {
        self.surf.distance(&other.surf) + (self.z - other.z).abs()
    }

    /// Displacement from `self` to `other` in body coordinates
    /// `(u, s, c, n)`, using the nearest lift.
    pub fn body_delta(&self, other: &ProductPoint) -> [f64; 4] {
        let b = self.surf.body_delta(&other.surf);
        [b[0], b[1], b[2], other.z - self.z]
    }

    /// Moves by `exp(v)` in body coordinates, `v = (u, s, c, n)`.
    pub fn displace(&self, v: [f64; 4]) -> Result<ProductPoint> {
        Ok(ProductPoint {
            surf: self.surf.displace([v[0], v[1], v[2]])?,
            z: self.z + v[3],
        })
    }
}

/// `S = G x id` with `G` the time-`delta` geodesic flow. `z` is untouched.
pub fn s_map(w: &ProductPoint, delta: f64) -> ProductPoint {
    ProductPoint {
        surf: SurfacePoint::from_lift(&w.surf.rep().mul_raw(&GroupElement::flow(delta)))
            .expect("reduction of a flowed point terminates"),
        z: w.z,
    }
}

/// Body-frame derivative of `S`: `diag(e^delta, e^-delta, 1, 1)`.
pub fn s_jacobian(delta: f64) -> Mat4 {
    let mut m = IDENTITY4;
    m[0][0] = delta.exp();
    m[1][1] = (-delta).exp();
    m
}

/// Coordinates in a [`Chart`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub z: f64,
}

impl ChartPoint {
    pub fn new(x: f64, y: f64, t: f64, z: f64) -> Self {
        ChartPoint { x, y, t, z }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.t, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        ChartPoint::new(a[0], a[1], a[2], a[3])
    }
}

/// A local chart around a reduced anchor frame.
#[derive(Clone, Debug)]
pub struct Chart {
    anchor: GroupElement,
    anchor_inv: GroupElement,
    anchor_base: (f64, f64),
    z_origin: f64,
    half: [f64; 3],
    /// Bound on the base-point displacement of chart points from the anchor.
    reach: f64,
    /// Deck transformations that can bring a reduced point into range.
    decks: Vec<GroupElement>,
}

impl Chart {
    /// Chart at `anchor` with half-widths `(x, y, t)`; `z_origin` is
    /// subtracted from the interval coordinate.
    pub fn new(anchor: &ProductPoint, half: [f64; 3]) -> Self {
        Self::with_z_origin(anchor.surf, anchor.z, half)
    }

    pub fn with_z_origin(anchor: SurfacePoint, z_origin: f64, half: [f64; 3]) -> Self {
        let group = surface_group();
        let a = *anchor.rep();
        let anchor_base = a.base_point();
        // Each factor moves the base point by at most its parameter.
        let reach = half[0] + half[1] + half[2] + 1e-9;
        let r0 = hyperbolic_distance((0.0, 1.0), anchor_base);
        let decks = group
            .shell()
            .iter()
            .take_while(|e| e.displacement <= r0 + reach + group.circumradius())
            .filter(|e| {
                hyperbolic_distance(anchor_base, e.element.base_point())
                    <= reach + group.circumradius() + 1e-9
            })
            .map(|e| e.element)
            .collect();
        Chart {
            anchor: a,
            anchor_inv: a.inverse(),
            anchor_base,
            z_origin,
            half,
            reach,
            decks,
        }
    }

    pub fn anchor(&self) -> SurfacePoint {
        SurfacePoint::from_reduced(self.anchor)
    }

    pub fn anchor_element(&self) -> &GroupElement {
        &self.anchor
    }

    pub fn z_origin(&self) -> f64 {
        self.z_origin
    }

    pub fn half_widths(&self) -> [f64; 3] {
        self.half
    }

    pub fn contains(&self, c: &ChartPoint) -> bool {
        c.x.abs() <= self.half[0] && c.y.abs() <= self.half[1] && c.t.abs() <= self.half[2]
    }

    /// The unreduced frame `A upper(y) lower(x) flow(t)`.
    pub fn lift(&self, c: &ChartPoint) -> GroupElement {
        let e = (0.5 * c.t).exp();
        // upper(y) lower(x) = [[1 + xy, y], [x, 1]]
        let m = GroupElement {
            a: (1.0 + c.x * c.y) * e,
            b: c.y / e,
            c: c.x * e,
            d: 1.0 / e,
        };
        self.anchor.mul_raw(&m).renormalized()
    }

    pub fn to_manifold(&self, c: &ChartPoint) -> Result<ProductPoint> {
        if !self.contains(c) {
            return Err(Error::OutOfChart("half-width exceeded"));
        }
        Ok(self.to_manifold_unchecked(c))
    }

    pub(crate) fn to_manifold_unchecked(&self, c: &ChartPoint) -> ProductPoint {
        ProductPoint {
            surf: SurfacePoint::from_lift(&self.lift(c)).expect("reduction terminates"),
            z: c.z + self.z_origin,
        }
    }

    /// Closed-form factorisation of `A^-1 g` for a lift `g`.
    pub fn factor(&self, g: &GroupElement) -> Result<ChartPoint> {
        let mut m = self.anchor_inv.mul_raw(g);
        if m.d < 0.0 {
            m = GroupElement {
                a: -m.a,
                b: -m.b,
                c: -m.c,
                d: -m.d,
            };
        }
        if m.d < 1e-12 {
            return Err(Error::Singular("chart factorisation denominator"));
        }
        Ok(ChartPoint {
            x: m.c * m.d,
            y: m.b / m.d,
            t: -2.0 * m.d.ln(),
            z: 0.0,
        })
    }

    /// Chart coordinates of `w`, or `None` when no lift lies inside the
    /// half-widths.
    pub fn locate(&self, w: &ProductPoint) -> Option<ChartPoint> {
        let g = w.surf.rep();
        let gz = g.base_point();
        let mut best: Option<(f64, ChartPoint)> = None;
        let (ax, ay) = self.anchor_base;
        let bound = 2.0 * ay * (self.reach.cosh() - 1.0);
        for deck in &self.decks {
            let dz = deck.act(gz);
            let (dx, dy) = (dz.0 - ax, dz.1 - ay);
            if dx * dx + dy * dy > bound * dz.1 {
                continue;
            }
            let lift = deck.mul_raw(g);
            if let Ok(mut c) = self.factor(&lift) {
                if self.contains(&c) {
                    c.z = w.z - self.z_origin;
                    let size = c.x.abs() + c.y.abs() + c.t.abs();
                    if best.map_or(true, |(s, _)| size < s) {
                        best = Some((size, c));
                    }
                }
            }
        }
        best.map(|(_, c)| c)
    }

    pub fn to_chart(&self, w: &ProductPoint) -> Result<ChartPoint> {
        self.locate(w).ok_or(Error::OutOfChart("no lift within half-widths"))
    }

    /// Chart-to-body Jacobian at `c`: rows `(u, s, c, n)`, columns
    /// `(x, y, t, z)`. Its determinant is 1.
    pub fn body_jacobian(c: &ChartPoint) -> Mat4 {
        let et = c.t.exp();
        [
            [et, -c.x * c.x * et, 0.0, 0.0],
            [0.0, 1.0 / et, 0.0, 0.0],
            [0.0, 2.0 * c.x, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn body_jacobian_inv(c: &ChartPoint) -> Mat4 {
        let et = c.t.exp();
        [
            [1.0 / et, c.x * c.x * et, 0.0, 0.0],
            [0.0, et, 0.0, 0.0],
            [0.0, -2.0 * c.x * et, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    /// Converts a chart-coordinate Jacobian of a map with input `from` and
    /// output `to` (both in this chart) into the body frame.
    pub fn to_body(from: &ChartPoint, to: &ChartPoint, d: &Mat4) -> Mat4 {
        mat_mul(
            &mat_mul(&Self::body_jacobian(to), d),
            &Self::body_jacobian_inv(from),
        )
    }

    /// Ratio of the chart volume `dx dy dt` to the Haar volume, measured by
    /// central finite differences of the lift at `c`.
    pub fn measured_volume_factor(&self, c: &ChartPoint, h: f64) -> f64 {
        let g = self.lift(c);
        let ginv = g.inverse();
        let mut cols = [[0.0; 3]; 3];
        for (k, col) in cols.iter_mut().enumerate() {
            let mut p = c.as_array();
            let mut q = c.as_array();
            p[k] += h;
            q[k] -= h;
            let gp = ginv.mul_raw(&self.lift(&ChartPoint::from_array(p))).renormalized();
            let gq = ginv.mul_raw(&self.lift(&ChartPoint::from_array(q))).renormalized();
            let bp = gp.log().expect("small displacement").body();
            let bq = gq.log().expect("small displacement").body();
            for i in 0..3 {
                col[i] = (bp[i] - bq[i]) / (2.0 * h);
            }
        }
        let m = |i: usize, j: usize| cols[j][i];
        (m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)))
        .abs()
    }
}

/// The invariant frame at a point: `E^u, E^s, E^c` are left translates of
/// the lower nilpotent, the upper nilpotent and half the flow generator,
/// and `E^n` is the interval direction.
#[derive(Clone, Copy, Debug)]
pub struct InvariantFrame {
    pub at: ProductPoint,
}

impl InvariantFrame {
    pub const NAMES: [&'static str; 4] = ["u", "s", "c", "n"];

    /// Body coordinates of frame vector `k`.
    pub fn vector(k: usize) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[k] = 1.0;
        v
    }

    /// Frame vector `k` expressed in the coordinates of a chart at `c`.
    pub fn in_chart(c: &ChartPoint, k: usize) -> [f64; 4] {
        let inv = Chart::body_jacobian_inv(c);
        [inv[0][k], inv[1][k], inv[2][k], inv[3][k]]
    }
}

pub fn frame_at(w: &ProductPoint) -> InvariantFrame {
    InvariantFrame { at: *w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn body_jacobian_inverse_is_inverse() {
        let c = ChartPoint::new(0.13, -0.2, 0.07, 0.3);
        let p = mat_mul(&Chart::body_jacobian(&c), &Chart::body_jacobian_inv(&c));
        assert!(frobenius_diff(&p, &IDENTITY4) < 1e-14);
        assert!((det4(&Chart::body_jacobian(&c)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stable_displacement_factorises_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = ProductPoint::random(&mut rng);
        let chart = Chart::new(&w, [0.1, 0.1, 0.1]);
        let moved = w.surf.rep().mul_raw(&GroupElement::upper(0.01)).renormalized();
        let c = chart.factor(&moved).unwrap();
        assert!(c.x.abs() < 1e-12 && (c.y - 0.01).abs() < 1e-12 && c.t.abs() < 1e-12);
    }
}
