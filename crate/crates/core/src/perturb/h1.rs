//! The first perturbation: the time-`beta` map of a divergence-free field
//! supported near the column `{p} x I`.
//!
//! In the chart at `p` the field is Hamiltonian in the `(x, z)` plane with
//! stream function `H = phi(sqrt(y^2 + t^2)) xi(z) Psi(x)`, and `(y, t)` are
//! frozen. The flow is approximated by the implicit midpoint rule.

use crate::error::{Error, Result};
use crate::product::{Chart, ChartPoint, Mat4, ProductPoint, IDENTITY4};

use super::bumps::BumpSuite;

/// Newton iteration budget of one midpoint step.
pub const MAX_NEWTON: usize = 50;
const NEWTON_TOL: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct H1 {
    chart: Chart,
    suite: BumpSuite,
    beta: f64,
    steps: usize,
}

/// Result of integrating in chart coordinates: the endpoint and the
/// Jacobian with respect to `(x, y, t, z)`.
#[derive(Clone, Copy, Debug)]
pub struct H1Flow {
    pub out: ChartPoint,
    pub jac: Mat4,
}

impl H1 {
    pub fn new(p: &ProductPoint, suite: BumpSuite, beta: f64, steps: usize) -> Self {
        let e = suite.eps1;
        let chart = Chart::with_z_origin(p.surf, 0.0, [e, e, e]);
        H1 { chart, suite, beta, steps: steps.max(1) }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn suite(&self) -> &BumpSuite {
        &self.suite
    }

    /// Stream function at a chart point.
    pub fn stream(&self, c: &ChartPoint) -> f64 {
        let s = c.y.hypot(c.t);
        self.suite.phi(s) * self.suite.xi(c.z) * self.suite.big_psi(c.x)
    }

    /// Field value `(dx/dt, dz/dt)` for amplitude `a = phi(s)`.
    fn field(&self, a: f64, x: f64, z: f64) -> [f64; 2] {
        let s = &self.suite;
        [-a * s.dxi(z) * s.big_psi(x), a * s.xi(z) * s.psi(x)]
    }

    /// Derivative of the field with respect to `(x, z)`.
    fn field_jac(&self, a: f64, x: f64, z: f64) -> [[f64; 2]; 2] {
        let s = &self.suite;
        [
            [-a * s.dxi(z) * s.psi(x), -a * s.ddxi(z) * s.big_psi(x)],
            [a * s.xi(z) * s.dpsi(x), a * s.dxi(z) * s.psi(x)],
        ]
    }

    /// Whether the chart point lies where the field can be nonzero.
    pub fn in_support(&self, c: &ChartPoint) -> bool {
        let e = self.suite.eps1;
        c.x.abs() < e && c.y.hypot(c.t) < e && c.z > 0.0 && c.z < 1.0
    }

    /// Integrates for time `dir * beta` in chart coordinates.
    pub fn flow_chart(&self, c: &ChartPoint, dir: f64, with_jac: bool) -> Result<H1Flow> {
        let s = c.y.hypot(c.t);
        let a = self.suite.phi(s);
        if self.beta == 0.0 || a == 0.0 || !self.in_support(c) {
            return Ok(H1Flow { out: *c, jac: IDENTITY4 });
        }
        let h = dir * self.beta / self.steps as f64;
        let (mut x, mut z) = (c.x, c.z);
        // d(x,z)/d(x0,z0) and d(x,z)/da
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        let mut da = [0.0, 0.0];
        for _ in 0..self.steps {
            let f0 = self.field(a, x, z);
            let (mut x1, mut z1) = (x + h * f0[0], z + h * f0[1]);
            let mut converged = false;
            for _ in 0..MAX_NEWTON {
                let (xm, zm) = (0.5 * (x + x1), 0.5 * (z + z1));
                let f = self.field(a, xm, zm);
                let g = [x1 - x - h * f[0], z1 - z - h * f[1]];
                let j = self.field_jac(a, xm, zm);
                let k = [
                    [1.0 - 0.5 * h * j[0][0], -0.5 * h * j[0][1]],
                    [-0.5 * h * j[1][0], 1.0 - 0.5 * h * j[1][1]],
                ];
                let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
                let dx = (k[1][1] * g[0] - k[0][1] * g[1]) / det;
                let dz = (k[0][0] * g[1] - k[1][0] * g[0]) / det;
                x1 -= dx;
                z1 -= dz;
                if dx.abs().max(dz.abs()) <= NEWTON_TOL * (1.0 + x1.abs().max(z1.abs())) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::IntegratorDivergence(MAX_NEWTON));
            }
            if with_jac {
                let (xm, zm) = (0.5 * (x + x1), 0.5 * (z + z1));
                let j = self.field_jac(a, xm, zm);
                let fhat = self.field(1.0, xm, zm);
                // (I - h/2 J)^-1 (I + h/2 J) and the amplitude sensitivity
                let lhs = [
                    [1.0 - 0.5 * h * j[0][0], -0.5 * h * j[0][1]],
                    [-0.5 * h * j[1][0], 1.0 - 0.5 * h * j[1][1]],
                ];
                let rhs = [
                    [1.0 + 0.5 * h * j[0][0], 0.5 * h * j[0][1]],
                    [0.5 * h * j[1][0], 1.0 + 0.5 * h * j[1][1]],
                ];
                let det = lhs[0][0] * lhs[1][1] - lhs[0][1] * lhs[1][0];
                let inv = [
                    [lhs[1][1] / det, -lhs[0][1] / det],
                    [-lhs[1][0] / det, lhs[0][0] / det],
                ];
                let step = mul2(&inv, &rhs);
                m = mul2(&step, &m);
                // dx1/da = inv * (rhs_part * dx/da + h * fhat)
                let prop = mulv2(&step, &da);
                let src = mulv2(&inv, &[h * fhat[0], h * fhat[1]]);
                da = [prop[0] + src[0], prop[1] + src[1]];
            }
            x = x1;
            z = z1;
        }
        let mut jac = IDENTITY4;
        if with_jac {
            let dads = self.suite.dphi(s);
            let (dsy, dst) = if s > 0.0 { (c.y / s, c.t / s) } else { (0.0, 0.0) };
            jac[0] = [m[0][0], da[0] * dads * dsy, da[0] * dads * dst, m[0][1]];
            jac[3] = [m[1][0], da[1] * dads * dsy, da[1] * dads * dst, m[1][1]];
        }
        Ok(H1Flow { out: ChartPoint { x, y: c.y, t: c.t, z }, jac })
    }

    /// Applies the map (`dir = 1`) or its inverse (`dir = -1`).
    pub fn apply(&self, w: &ProductPoint, dir: f64) -> Result<ProductPoint> {
        if self.beta == 0.0 {
            return Ok(*w);
        }
        let Some(c) = self.chart.locate(w) else { return Ok(*w) };
        if !self.in_support(&c) {
            return Ok(*w);
        }
        let f = self.flow_chart(&c, dir, false)?;
        Ok(self.chart.to_manifold_unchecked(&f.out))
    }

    /// Image and body-frame Jacobian.
    pub fn apply_with_jacobian(&self, w: &ProductPoint, dir: f64) -> Result<(ProductPoint, Mat4)> {
        if self.beta == 0.0 {
            return Ok((*w, IDENTITY4));
        }
        let Some(c) = self.chart.locate(w) else { return Ok((*w, IDENTITY4)) };
        if !self.in_support(&c) {
            return Ok((*w, IDENTITY4));
        }
        let f = self.flow_chart(&c, dir, true)?;
        Ok((
            self.chart.to_manifold_unchecked(&f.out),
            Chart::to_body(&c, &f.out, &f.jac),
        ))
    }
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn mulv2(a: &[[f64; 2]; 2], v: &[f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}
