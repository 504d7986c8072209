//! Boxes along orbit segments of `S` and the third perturbation: a rotation
//! of the `(t, z)` plane inside each box, with the angle cut off smoothly
//! towards the box boundary.

use crate::product::{Chart, ChartPoint, Mat4, ProductPoint, IDENTITY4};

use super::bumps::BumpSuite;

/// One box `Delta_ij`, the image of the base box `Delta_0j` under `S^i`.
#[derive(Clone, Debug)]
pub struct Box4 {
    pub level: usize,
    pub index: usize,
    chart: Chart,
    /// Half-widths `(s', s'', s)` of the base box.
    base_half: [f64; 3],
    /// `e^{-i delta}`, the factor pulling `x` back to the base box.
    pull_x: f64,
}

impl Box4 {
    pub fn new(center: &ProductPoint, level: usize, index: usize, delta: f64, half: [f64; 3]) -> Self {
        let shift = level as f64 * delta;
        let anchor = center
            .surf
            .flow(shift)
            .expect("reduction of a flowed point terminates");
        let ex = shift.exp();
        let chart = Chart::with_z_origin(anchor, center.z, [half[0] * ex, half[1] / ex, half[2]]);
        Box4 { level, index, chart, base_half: half, pull_x: 1.0 / ex }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn center(&self) -> ProductPoint {
        ProductPoint::new(self.chart.anchor(), self.chart.z_origin())
    }

    /// Upper bound on the metric distance from the centre to any point of
    /// the box.
    pub fn reach(&self) -> f64 {
        let h = self.chart.half_widths();
        h[0] + h[1] + h[2].hypot(self.base_half[2])
    }

    pub fn z_range(&self) -> (f64, f64) {
        let z = self.chart.z_origin();
        (z - self.base_half[2], z + self.base_half[2])
    }

    /// Coordinates pulled back to the base box.
    fn base_coords(&self, c: &ChartPoint) -> (f64, f64, f64) {
        (c.x * self.pull_x, c.y / self.pull_x, c.t.hypot(c.z))
    }

    pub fn in_support(&self, c: &ChartPoint) -> bool {
        let (x, y, r) = self.base_coords(c);
        let [su, ss, s] = self.base_half;
        x.abs() < su && y.abs() < ss && r < s
    }

    /// Whether all cutoffs equal one.
    pub fn in_plateau(&self, c: &ChartPoint, kappa: f64) -> bool {
        let (x, y, r) = self.base_coords(c);
        let [su, ss, s] = self.base_half;
        x.abs() < su - s && y.abs() < ss - s && r <= (1.0 - kappa) * s
    }

    /// Rotation angle and its gradient in chart coordinates.
    fn angle(&self, c: &ChartPoint, theta: f64, suite: &BumpSuite, grad: bool) -> (f64, [f64; 4]) {
        let (x, y, r) = self.base_coords(c);
        let [su, ss, s] = self.base_half;
        let zx = suite.zeta(su / s, x.abs() / s);
        let zy = suite.zeta(ss / s, y.abs() / s);
        let zr = suite.zeta1(r / s);
        let a = theta * zx * zy * zr;
        if !grad {
            return (a, [0.0; 4]);
        }
        let dzx = suite.dzeta(su / s, x.abs() / s) * x.signum() * self.pull_x / s;
        let dzy = suite.dzeta(ss / s, y.abs() / s) * y.signum() / (self.pull_x * s);
        let dzr = suite.dzeta1(r / s) / s;
        let (rt, rz) = if r > 0.0 { (c.t / r, c.z / r) } else { (0.0, 0.0) };
        (
            a,
            [
                theta * dzx * zy * zr,
                theta * zx * dzy * zr,
                theta * zx * zy * dzr * rt,
                theta * zx * zy * dzr * rz,
            ],
        )
    }

    pub fn rotate_chart(&self, c: &ChartPoint, theta: f64, suite: &BumpSuite) -> ChartPoint {
        if !self.in_support(c) {
            return *c;
        }
        let (a, _) = self.angle(c, theta, suite, false);
        let (sn, cs) = a.sin_cos();
        ChartPoint { x: c.x, y: c.y, t: cs * c.t - sn * c.z, z: sn * c.t + cs * c.z }
    }

    pub fn jacobian_chart(&self, c: &ChartPoint, theta: f64, suite: &BumpSuite) -> Mat4 {
        if !self.in_support(c) {
            return IDENTITY4;
        }
        let (a, g) = self.angle(c, theta, suite, true);
        let (sn, cs) = a.sin_cos();
        let t1 = cs * c.t - sn * c.z;
        let z1 = sn * c.t + cs * c.z;
        let mut j = IDENTITY4;
        let rot_t = [0.0, 0.0, cs, -sn];
        let rot_z = [0.0, 0.0, sn, cs];
        for k in 0..4 {
            j[2][k] = rot_t[k] - z1 * g[k];
            j[3][k] = rot_z[k] + t1 * g[k];
        }
        j
    }
}

/// The boxes `Delta_ij`, `i < k0`, `j < J`, and the rotation angle.
#[derive(Clone, Debug)]
pub struct BoxFamily {
    pub boxes: Vec<Box4>,
    pub k0: usize,
    pub theta: f64,
    z_lo: f64,
    z_hi: f64,
}

impl BoxFamily {
    /// Builds the `k0` images of each base box centred at `centers`.
    pub fn new(centers: &[ProductPoint], k0: usize, delta: f64, half: [f64; 3], theta: f64) -> Self {
        let mut boxes = Vec::with_capacity(centers.len() * k0);
        for (j, c) in centers.iter().enumerate() {
            for i in 0..k0 {
                boxes.push(Box4::new(c, i, j, delta, half));
            }
        }
        let z_lo = boxes.iter().map(|b| b.z_range().0).fold(f64::INFINITY, f64::min);
        let z_hi = boxes.iter().map(|b| b.z_range().1).fold(f64::NEG_INFINITY, f64::max);
        BoxFamily { boxes, k0, theta, z_lo, z_hi }
    }

    pub fn empty() -> Self {
        BoxFamily { boxes: Vec::new(), k0: 0, theta: 0.0, z_lo: 1.0, z_hi: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.z_lo, self.z_hi)
    }

    /// The box whose support contains `w`, with its chart coordinates.
    pub fn locate(&self, w: &ProductPoint) -> Option<(&Box4, ChartPoint)> {
        if w.z <= self.z_lo || w.z >= self.z_hi {
            return None;
        }
        for b in &self.boxes {
            let (lo, hi) = b.z_range();
            if w.z <= lo || w.z >= hi {
                continue;
            }
            if let Some(c) = b.chart.locate(w) {
                if b.in_support(&c) {
                    return Some((b, c));
                }
            }
        }
        None
    }

    pub fn apply(&self, w: &ProductPoint, dir: f64, suite: &BumpSuite) -> ProductPoint {
        if self.theta == 0.0 {
            return *w;
        }
        match self.locate(w) {
            Some((b, c)) => b.chart.to_manifold_unchecked(&b.rotate_chart(&c, dir * self.theta, suite)),
            None => *w,
        }
    }

    pub fn apply_with_jacobian(&self, w: &ProductPoint, dir: f64, suite: &BumpSuite) -> (ProductPoint, Mat4) {
        let (out, j, _) = self.apply_with_jacobian_detail(w, dir, suite);
        (out, j)
    }

    /// Image, body-frame Jacobian and the change of the chart coordinate
    /// `t` under the rotation.
    pub fn apply_with_jacobian_detail(
        &self,
        w: &ProductPoint,
        dir: f64,
        suite: &BumpSuite,
    ) -> (ProductPoint, Mat4, f64) {
        if self.theta == 0.0 {
            return (*w, IDENTITY4, 0.0);
        }
        match self.locate(w) {
            Some((b, c)) => {
                let th = dir * self.theta;
                let out = b.rotate_chart(&c, th, suite);
                let j = b.jacobian_chart(&c, th, suite);
                (
                    b.chart.to_manifold_unchecked(&out),
                    Chart::to_body(&c, &out, &j),
                    out.t - c.t,
                )
            }
            None => (*w, IDENTITY4, 0.0),
        }
    }
}
