//! Pointwise determinant identities of the cocycles, finite-difference
//! Jacobians and sampled `C^0`/`C^1` distances to `S`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::perturb::{MapKind, System};
use crate::product::{det4, minor_det, s_jacobian, Chart, ChartPoint, Mat4, ProductPoint};

/// Frame indices of `E^un` and `E^ucn`.
const UN: [usize; 2] = [0, 3];
const UCN: [usize; 3] = [0, 2, 3];

/// Where a sample was drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SampleRegion {
    Uniform,
    FirstSupport,
    TwistSupport,
    Boxes,
}

/// Samples of `N`: a quarter volume-uniform, the rest spread over the chart
/// boxes of the three perturbation supports (for the first perturbation,
/// the `S`-preimage of its chart box) so that every identity is exercised
/// where it is nontrivial.
pub fn sample_points(sys: &System, n: usize, seed: u64) -> Vec<(SampleRegion, ProductPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let region = match i % 4 {
            0 => SampleRegion::Uniform,
            1 => SampleRegion::FirstSupport,
            2 => SampleRegion::TwistSupport,
            _ if sys.boxes.is_empty() => SampleRegion::Uniform,
            _ => SampleRegion::Boxes,
        };
        let w = match region {
            SampleRegion::Uniform => ProductPoint::random(&mut rng),
            SampleRegion::FirstSupport => {
                let mut c = in_chart(sys.h1.chart(), &mut rng);
                c.z = rng.gen_range(0.0..1.0);
                // the first perturbation acts after S, so sample its preimage
                let v = sys.h1.chart().to_manifold_unchecked(&c);
                sys.step_inverse(MapKind::S, &v).unwrap_or(v)
            }
            SampleRegion::TwistSupport => {
                let ch = sys.h2.chart();
                let mut c = in_chart(ch, &mut rng);
                c.z = rng.gen_range(-1.0..1.0) * ch.half_widths()[0];
                ch.to_manifold_unchecked(&c)
            }
            SampleRegion::Boxes => {
                let b = &sys.boxes.boxes[rng.gen_range(0..sys.boxes.len())];
                let mut c = in_chart(b.chart(), &mut rng);
                c.z = rng.gen_range(-1.0..1.0) * b.chart().half_widths()[2];
                b.chart().to_manifold_unchecked(&c)
            }
        };
        out.push((region, w));
    }
    out
}

fn in_chart<R: Rng>(chart: &Chart, rng: &mut R) -> ChartPoint {
    let h = chart.half_widths();
    ChartPoint::new(
        rng.gen_range(-h[0]..h[0]),
        rng.gen_range(-h[1]..h[1]),
        rng.gen_range(-h[2]..h[2]),
        0.0,
    )
}

/// Outcome of [`sum_invariant_check`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct SumInvariantReport {
    pub map: String,
    pub samples: usize,
    /// Samples where the Jacobian differs from that of `S`.
    pub nontrivial: usize,
    pub violations: usize,
    /// Largest `|ratio - 1|` of `det` on `E^un` (not gated for `P`).
    pub max_un: f64,
    /// Largest `|ratio - 1|` of `det` on `E^ucn`, gated form.
    pub max_ucn: f64,
    pub max_det4: f64,
    /// Largest entry of the `s` row in the `u, c, n` columns.
    pub max_s_leak: f64,
    /// Largest `|ratio - 1|` of the body-frame `E^ucn` determinant for `P`
    /// before the box-chart correction; informational.
    pub body_ucn_deviation: f64,
    pub tol: f64,
}

impl SumInvariantReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks the pointwise determinant identities at `n` sampled points.
///
/// For `R` and `Q` the `E^un` and `E^ucn` determinants equal those of `S`
/// and the full determinant is one. For `P`, whose third factor rotates
/// the `(t, z)` plane of a box chart, the `E^ucn` determinant is compared
/// in that chart: the body-frame value carries the factor `e^{t' - t}` of
/// the chart change, which is divided out. The `s` row must vanish on the
/// `(u, c, n)` columns so that `E^ucn` is invariant.
pub fn sum_invariant_check(sys: &System, kind: MapKind, n: usize, seed: u64, tol: f64) -> Result<SumInvariantReport> {
    let ds = s_jacobian(sys.delta);
    let e_delta = sys.delta.exp();
    let mut rep = SumInvariantReport { map: kind.name().into(), tol, ..Default::default() };
    for (_, w) in sample_points(sys, n, seed) {
        let (_, j, shift) = sys.step_with_jacobian_detail(kind, &w)?;
        rep.samples += 1;
        if j != ds {
            rep.nontrivial += 1;
        }
        let un = (minor_det(&j, &UN) / e_delta - 1.0).abs();
        let body_ucn = minor_det(&j, &UCN) / e_delta;
        let ucn = (body_ucn * (-shift).exp() - 1.0).abs();
        let d4 = (det4(&j) - 1.0).abs();
        let leak = [0, 2, 3].iter().map(|&k| j[1][k].abs()).fold(0.0, f64::max);
        rep.max_ucn = rep.max_ucn.max(ucn);
        rep.max_det4 = rep.max_det4.max(d4);
        rep.max_s_leak = rep.max_s_leak.max(leak);
        rep.body_ucn_deviation = rep.body_ucn_deviation.max((body_ucn - 1.0).abs());
        let un_bad = if kind == MapKind::P {
            false
        } else {
            rep.max_un = rep.max_un.max(un);
            un > tol
        };
        if un_bad || ucn > tol || d4 > tol || leak > tol {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

/// Central finite-difference Jacobian of one step in the body frame.
pub fn fd_jacobian(sys: &System, kind: MapKind, w: &ProductPoint, h: f64) -> Result<Mat4> {
    let base = sys.step(kind, w)?;
    let mut j = [[0.0; 4]; 4];
    for k in 0..4 {
        let mut v = [0.0; 4];
        v[k] = h;
        let plus = base.body_delta(&sys.step(kind, &w.displace(v)?)?);
        v[k] = -h;
        let minus = base.body_delta(&sys.step(kind, &w.displace(v)?)?);
        for i in 0..4 {
            j[i][k] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(j)
}

/// Operator 2-norm by power iteration on `A^T A`.
pub fn spectral_norm(a: &Mat4) -> f64 {
    let mut ata = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            ata[i][j] = (0..4).map(|k| a[k][i] * a[k][j]).sum();
        }
    }
    let mut v = [1.0, 0.7, 0.4, 0.2];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut nv = [0.0; 4];
        for i in 0..4 {
            nv[i] = (0..4).map(|k| ata[i][k] * v[k]).sum();
        }
        let n = nv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return 0.0;
        }
        let prev = lambda;
        lambda = n;
        v = nv.map(|x| x / n);
        if (lambda - prev).abs() <= 1e-15 * lambda {
            break;
        }
    }
    lambda.sqrt()
}

/// Sampled distances of one map from `S`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct C1Distance {
    pub c0: f64,
    /// Largest operator norm of `DF - DS` with analytic Jacobians.
    pub c1_analytic: f64,
    /// The same with finite-difference Jacobians.
    pub c1_fd: f64,
    pub samples: usize,
}

impl C1Distance {
    pub fn c1(&self) -> f64 {
        self.c0.max(self.c1_analytic).max(self.c1_fd)
    }
}

/// `C^0` and `C^1` distance of `kind` from `S` over [`sample_points`].
pub fn c1_distance(sys: &System, kind: MapKind, n: usize, seed: u64, fd_step: f64) -> Result<C1Distance> {
    let ds = s_jacobian(sys.delta);
    let mut out = C1Distance::default();
    for (_, w) in sample_points(sys, n, seed) {
        let (fw, j) = sys.step_with_jacobian(kind, &w)?;
        out.c0 = out.c0.max(fw.distance(&sys.step(MapKind::S, &w)?));
        out.c1_analytic = out.c1_analytic.max(spectral_norm(&sub(&j, &ds)));
        if j != ds {
            let fd = fd_jacobian(sys, kind, &w, fd_step)?;
            out.c1_fd = out.c1_fd.max(spectral_norm(&sub(&fd, &ds)));
        }
        out.samples += 1;
    }
    Ok(out)
}

fn sub(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = *a;
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] -= b[i][j];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let mut a = [[0.0; 4]; 4];
        a[0][0] = -3.0;
        a[1][1] = 2.0;
        a[2][3] = 0.5;
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-12);
    }
}
