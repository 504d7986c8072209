//! The second perturbation: a twist of the `(x, z)` plane about the centre
//! `w*`, with angle `alpha rho(sqrt(y^2 + t^2)) rho(r)`.

use crate::product::{Chart, ChartPoint, Mat4, ProductPoint, IDENTITY4};

use super::bumps::BumpSuite;

#[derive(Clone, Debug)]
pub struct H2 {
    chart: Chart,
    suite: BumpSuite,
    alpha: f64,
}

impl H2 {
    /// Twist centred at `center`; the chart's interval origin is
    /// `center.z`.
    pub fn new(center: &ProductPoint, suite: BumpSuite, alpha: f64) -> Self {
        let e = suite.eps4;
        H2 { chart: Chart::new(center, [e, e, e]), suite, alpha }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn center(&self) -> ProductPoint {
        ProductPoint::new(self.chart.anchor(), self.chart.z_origin())
    }

    /// Cheap necessary condition for lying in the support.
    #[inline]
    pub fn z_may_hit(&self, z: f64) -> bool {
        (z - self.chart.z_origin()).abs() < self.suite.eps4
    }

    /// Twist angle at a chart point.
    pub fn angle(&self, c: &ChartPoint) -> f64 {
        let r = c.x.hypot(c.z);
        self.alpha * self.suite.rho(c.y.hypot(c.t)) * self.suite.rho(r)
    }

    pub fn in_support(&self, c: &ChartPoint) -> bool {
        let e = self.suite.eps4;
        c.x.hypot(c.z) < e && c.y.hypot(c.t) < e
    }

    /// Twist by `dir` times the angle, in chart coordinates.
    pub fn twist_chart(&self, c: &ChartPoint, dir: f64) -> ChartPoint {
        if !self.in_support(c) {
            return *c;
        }
        let th = dir * self.angle(c);
        let (sn, cs) = th.sin_cos();
        ChartPoint {
            x: cs * c.x - sn * c.z,
            y: c.y,
            t: c.t,
            z: sn * c.x + cs * c.z,
        }
    }

    /// Chart Jacobian of the twist: `R(T) + (-z', x') (x) grad T`.
    pub fn jacobian_chart(&self, c: &ChartPoint, dir: f64) -> Mat4 {
        if !self.in_support(c) || self.alpha == 0.0 {
            return IDENTITY4;
        }
        let s = &self.suite;
        let q = c.y.hypot(c.t);
        let r = c.x.hypot(c.z);
        let a = dir * self.alpha;
        let th = a * s.rho(q) * s.rho(r);
        let (sn, cs) = th.sin_cos();
        let out = self.twist_chart(c, dir);
        let dq = s.drho(q);
        let dr = s.drho(r);
        let grad = [
            if r > 0.0 { a * s.rho(q) * dr * c.x / r } else { 0.0 },
            if q > 0.0 { a * dq * s.rho(r) * c.y / q } else { 0.0 },
            if q > 0.0 { a * dq * s.rho(r) * c.t / q } else { 0.0 },
            if r > 0.0 { a * s.rho(q) * dr * c.z / r } else { 0.0 },
        ];
        let mut j = IDENTITY4;
        let rot_x = [cs, 0.0, 0.0, -sn];
        let rot_z = [sn, 0.0, 0.0, cs];
        for k in 0..4 {
            j[0][k] = rot_x[k] - out.z * grad[k];
            j[3][k] = rot_z[k] + out.x * grad[k];
        }
        j
    }

    pub fn apply(&self, w: &ProductPoint, dir: f64) -> ProductPoint {
        if self.alpha == 0.0 || !self.z_may_hit(w.z) {
            return *w;
        }
        let Some(c) = self.chart.locate(w) else { return *w };
        if !self.in_support(&c) {
            return *w;
        }
        self.chart.to_manifold_unchecked(&self.twist_chart(&c, dir))
    }

    pub fn apply_with_jacobian(&self, w: &ProductPoint, dir: f64) -> (ProductPoint, Mat4) {
        if self.alpha == 0.0 || !self.z_may_hit(w.z) {
            return (*w, IDENTITY4);
        }
        let Some(c) = self.chart.locate(w) else { return (*w, IDENTITY4) };
        if !self.in_support(&c) {
            return (*w, IDENTITY4);
        }
        let out = self.twist_chart(&c, dir);
        let j = self.jacobian_chart(&c, dir);
        (self.chart.to_manifold_unchecked(&out), Chart::to_body(&c, &out, &j))
    }
}
