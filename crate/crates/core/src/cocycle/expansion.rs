//! The unstable slope `a(w)` of the twisted map `Q_{alpha,0}` and the
//! expansion integral `L(alpha) = int log eta_alpha`.
//!
//! `Q_{alpha,0}` is `S h2` with the twist of strength `alpha` and no first
//! perturbation. Its cocycle leaves the `(u, n)` plane invariant; there the
//! unstable direction is spanned by `(1, a(w))` and
//! `DQ (1, a(w)) = eta(w) (1, a(Q w))`. Outside the twist support
//! `eta = e^delta`, so `L(alpha) - delta` is the twist-support average of
//! `log eta - delta` times the relative volume of the support box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perturb::{MapKind, System};
use crate::product::{ChartPoint, ProductPoint};

/// Volume of `T^1 M0` in the left-invariant metric.
pub const UNIT_TANGENT_VOLUME: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Pullback controls for [`unstable_slope`].
#[derive(Clone, Copy, Debug)]
pub struct SlopeOptions {
    pub max_iter: usize,
    pub min_iter: usize,
    pub tol: f64,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        SlopeOptions { max_iter: 300, min_iter: 10, tol: 1e-10 }
    }
}

/// The map `Q_{alpha,0}` built from `sys`.
pub fn twisted_only(sys: &System, alpha: f64) -> System {
    sys.with_beta(0.0).with_alpha(alpha)
}

/// Slope `a(w)` of the unstable direction of `sys` (expected to be a
/// `Q_{alpha,0}`), computed from the backward orbit.
///
/// The product `M = DQ(w_-1) ... DQ(w_-K)` of `(u, n)` blocks is
/// accumulated; `M (1, 0)` has slope `a_K`. The influence of the unknown
/// slope at `w_-K` on `a_K` is `|det M| / M_00^2`; iteration stops once that
/// bound times `1 + a_K^2` is below `tol`.
pub fn unstable_slope(sys: &System, w: &ProductPoint, opts: SlopeOptions) -> Result<f64> {
    if sys.h2.alpha() == 0.0 {
        return Ok(0.0);
    }
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let mut cur = *w;
    for k in 1..=opts.max_iter {
        let prev = sys.step_inverse(MapKind::Q, &cur)?;
        let j = sys.step_jacobian(MapKind::Q, &prev)?;
        let b = [[j[0][0], j[0][3]], [j[3][0], j[3][3]]];
        m = [
            [m[0][0] * b[0][0] + m[0][1] * b[1][0], m[0][0] * b[0][1] + m[0][1] * b[1][1]],
            [m[1][0] * b[0][0] + m[1][1] * b[1][0], m[1][0] * b[0][1] + m[1][1] * b[1][1]],
        ];
        // keep entries moderate; slopes and sensitivities are scale-free
        let s = m[0][0].abs().max(m[1][0].abs());
        if s > 1e100 {
            m = m.map(|r| r.map(|x| x / s));
        }
        cur = prev;
        let a = m[1][0] / m[0][0];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let sens = (det / (m[0][0] * m[0][0])).abs();
        if k >= opts.min_iter && sens * (1.0 + a * a) < opts.tol {
            return Ok(a);
        }
    }
    Err(Error::NoConvergence(format!(
        "unstable slope not settled after {} pullbacks",
        opts.max_iter
    )))
}

/// `log eta(w)`: log of the `u` component of `DQ (1, a(w))`.
pub fn log_eta(sys: &System, w: &ProductPoint, opts: SlopeOptions) -> Result<f64> {
    let a = unstable_slope(sys, w, opts)?;
    let j = sys.step_jacobian(MapKind::Q, w)?;
    Ok((j[0][0] + j[0][3] * a).abs().ln())
}

/// Result of an expansion-integral estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionEstimate {
    pub alpha: f64,
    pub value: f64,
    pub std_error: f64,
    pub excluded_fraction: f64,
    pub samples: usize,
}

/// Per-sample contributions `log eta - delta` at the given chart points,
/// with `None` for excluded (non-converged) samples.
fn contributions(sys: &System, points: &[ChartPoint], opts: SlopeOptions) -> Vec<Option<f64>> {
    let chart = sys.h2.chart();
    points
        .iter()
        .map(|c| {
            if !sys.h2.in_support(c) {
                return Some(0.0);
            }
            let w = chart.to_manifold_unchecked(c);
            log_eta(sys, &w, opts).ok().map(|l| l - sys.delta)
        })
        .collect()
}

/// Antithetic sample pairs `(c, c with x -> -x)` in the twist support box,
/// drawn from the stream `task` of `seed`.
fn sample_pairs(eps4: f64, n_pairs: usize, seed: u64, task: u64) -> Vec<ChartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    let mut out = Vec::with_capacity(2 * n_pairs);
    for _ in 0..n_pairs {
        let c = ChartPoint::new(
            rng.gen_range(-eps4..eps4),
            rng.gen_range(-eps4..eps4),
            rng.gen_range(-eps4..eps4),
            rng.gen_range(-eps4..eps4),
        );
        out.push(c);
        out.push(ChartPoint { x: -c.x, ..c });
    }
    out
}

const CHUNK: usize = 512;

/// Pair means of the contributions, split into chunks that run in
/// parallel; `None` marks a pair with an excluded member. Also returns the
/// number of excluded samples.
fn pair_means(sys: &System, n_samples: usize, seed: u64, opts: SlopeOptions) -> (Vec<Option<f64>>, usize) {
    let n_pairs = n_samples.div_ceil(2);
    let eps4 = sys.cfg.eps4;
    let chunks: Vec<(u64, usize)> = (0..n_pairs.div_ceil(CHUNK))
        .map(|k| (k as u64, CHUNK.min(n_pairs - k * CHUNK)))
        .collect();
    let results: Vec<(Vec<Option<f64>>, usize)> = chunks
        .par_iter()
        .map(|&(task, len)| {
            let pts = sample_pairs(eps4, len, seed, task);
            let vals = contributions(sys, &pts, opts);
            let mut means = Vec::with_capacity(len);
            let mut excluded = 0;
            for pair in vals.chunks(2) {
                excluded += pair.iter().filter(|v| v.is_none()).count();
                means.push(match (pair[0], pair[1]) {
                    (Some(a), Some(b)) => Some(0.5 * (a + b)),
                    _ => None,
                });
            }
            (means, excluded)
        })
        .collect();
    let mut all = Vec::with_capacity(n_pairs);
    let mut excluded = 0;
    for (m, e) in results {
        all.extend(m);
        excluded += e;
    }
    (all, excluded)
}

fn mean_and_error(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of `L(alpha)` with `n_samples` volume-uniform
/// samples of the twist support box (antithetic in `x`).
pub fn expansion_integral(sys: &System, alpha: f64, n_samples: usize, seed: u64) -> Result<ExpansionEstimate> {
    expansion_integral_with(sys, alpha, n_samples, seed, SlopeOptions::default())
}

pub fn expansion_integral_with(
    sys: &System,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    opts: SlopeOptions,
) -> Result<ExpansionEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig("need at least two samples".into()));
    }
    let twisted = twisted_only(sys, alpha);
    if alpha == 0.0 {
        return Ok(ExpansionEstimate {
            alpha,
            value: sys.delta,
            std_error: 0.0,
            excluded_fraction: 0.0,
            samples: n_samples,
        });
    }
    let (pairs, excluded) = pair_means(&twisted, n_samples, seed, opts);
    let means: Vec<f64> = pairs.iter().flatten().copied().collect();
    if means.len() < 2 {
        return Err(Error::NoConvergence("all samples excluded".into()));
    }
    let (mean, err) = mean_and_error(&means);
    let scale = support_box_fraction(sys.cfg.eps4);
    Ok(ExpansionEstimate {
        alpha,
        value: sys.delta + scale * mean,
        std_error: scale * err,
        excluded_fraction: excluded as f64 / (2 * pairs.len()) as f64,
        samples: 2 * pairs.len(),
    })
}

/// Volume of the twist chart box `[-eps4, eps4]^4` relative to `N`.
pub fn support_box_fraction(eps4: f64) -> f64 {
    16.0 * eps4.powi(4) / UNIT_TANGENT_VOLUME
}

/// Centred difference `(L(h) - L(-h)) / 2h` with common random numbers,
/// and its standard error.
pub fn expansion_slope_at_zero(sys: &System, h: f64, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    let opts = SlopeOptions::default();
    let plus = twisted_only(sys, h);
    let minus = twisted_only(sys, -h);
    let (a, _) = pair_means(&plus, n_samples, seed, opts);
    let (b, _) = pair_means(&minus, n_samples, seed, opts);
    let diffs: Vec<f64> = a
        .iter()
        .zip(&b)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?) / (2.0 * h)))
        .collect();
    if diffs.len() < 2 {
        return Err(Error::NoConvergence("all samples excluded".into()));
    }
    let (mean, err) = mean_and_error(&diffs);
    let scale = support_box_fraction(sys.cfg.eps4);
    Ok((scale * mean, scale * err))
}
