//! The global map: rescaled copies of `P` on the bands `I_n`, `G x id`
//! elsewhere, and the diagnostics run on it.
//!
//! Band `n` carries `pi_n^{-1} f_n pi_n`, where `pi_n` maps `I_n` affinely
//! onto `[0, 1]` and `f_n` is `P` with its three perturbation strengths
//! multiplied by a factor chosen so that the sampled `C^1` distance of
//! `f_n` from `S` stays below `delta' n^{-4}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{c1_distance, lyapunov_spectrum_with, sample_points, spectral_norm, C1Distance, LyapunovReport};
use crate::error::{Error, Result};
use crate::hyperbolic::SurfacePoint;
use crate::perturb::{MapKind, System};
use crate::product::{s_jacobian, s_map, Mat4, ProductPoint, IDENTITY4};

/// Band `n >= 1`: `I_{2k} = [1/(k+2), 1/(k+1)]` and
/// `I_{2k-1} = [1 - 1/(k+1), 1 - 1/(k+2)]`.
pub fn band_interval(n: i64) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::BadIndex(n));
    }
    let k = ((n + 1) / 2) as f64;
    Ok(if n % 2 == 0 {
        (1.0 / (k + 2.0), 1.0 / (k + 1.0))
    } else {
        (1.0 - 1.0 / (k + 1.0), 1.0 - 1.0 / (k + 2.0))
    })
}

/// `|I_n|^{-1}`, the stretch of the rescaler `pi_n`, in exact arithmetic:
/// `(k+1)(k+2)` with `k = ceil(n/2)`.
pub fn band_stretch(n: i64) -> Result<f64> {
    band_interval(n)?;
    let k = ((n + 1) / 2) as f64;
    Ok((k + 1.0) * (k + 2.0))
}

/// Target `C^1` distance of `f_n` from `S`.
pub fn band_target(delta_prime: f64, n: usize) -> f64 {
    delta_prime / (n as f64).powi(4)
}

/// The bound on the `C^1` distance of band `n` of the global map from
/// `G x id`: `5 delta' n^{-2}` with a safety factor of `1.2`, enough to
/// absorb the stretch `6` of the first band on its own.
pub fn band_bound(delta_prime: f64, n: usize) -> f64 {
    1.2 * 5.0 * delta_prime / (n as f64).powi(2)
}

/// Fraction of each bound the tuned strengths may use on the tuning samples.
const TUNING_HEADROOM: f64 = 0.9;

#[derive(Clone, Debug, Serialize)]
pub struct AssemblyConfig {
    /// Number of retained bands; `0` leaves `G x id` everywhere.
    pub n_max: usize,
    pub delta_prime: f64,
    /// Samples of each `C^1` measurement used to choose the strengths.
    pub c1_samples: usize,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig { n_max: 4, delta_prime: 0.005, c1_samples: 2000, fd_step: 1e-6, seed: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct Band {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    /// Factor applied to the strengths of `P`.
    pub scale: f64,
    /// Sampled `C^1` distance of `f_n` from `S`.
    pub measured: C1Distance,
    /// Sampled `C^1` distance of the rescaled band map from `G x id`,
    /// kept below `5 delta' n^{-2}` as well.
    pub conjugated: C1Distance,
    pub system: System,
}

impl Band {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.lo && z <= self.hi
    }

    fn to_unit(&self, w: &ProductPoint) -> ProductPoint {
        ProductPoint { surf: w.surf, z: ((w.z - self.lo) / self.len()).clamp(0.0, 1.0) }
    }

    fn from_unit(&self, w: &ProductPoint) -> ProductPoint {
        let z = if w.z >= 1.0 { self.hi } else { (self.lo + w.z * self.len()).clamp(self.lo, self.hi) };
        ProductPoint { surf: w.surf, z }
    }

    /// Conjugates a Jacobian of `f_n` by the rescaler.
    fn conjugate(&self, j: &Mat4) -> Mat4 {
        let mut m = *j;
        let l = self.len();
        for k in 0..3 {
            m[3][k] *= l;
            m[k][3] /= l;
        }
        m
    }

    pub fn map(&self, w: &ProductPoint) -> Result<ProductPoint> {
        if !self.contains(w.z) {
            return Err(Error::BandMismatch { band: self.index, z: w.z });
        }
        Ok(self.from_unit(&self.system.step(MapKind::P, &self.to_unit(w))?))
    }

    pub fn map_with_jacobian(&self, w: &ProductPoint) -> Result<(ProductPoint, Mat4)> {
        if !self.contains(w.z) {
            return Err(Error::BandMismatch { band: self.index, z: w.z });
        }
        let (out, j) = self.system.step_with_jacobian(MapKind::P, &self.to_unit(w))?;
        Ok((self.from_unit(&out), self.conjugate(&j)))
    }

    /// The sample set of `f_n` carried into the band.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<ProductPoint> {
        sample_points(&self.system, count, seed)
            .into_iter()
            .map(|(_, w)| self.from_unit(&w))
            .collect()
    }

    /// Sampled `C^0` and `C^1` distance of the rescaled band map from
    /// `G x id`, with analytic and finite-difference Jacobians.
    pub fn c1_from_base(&self, count: usize, seed: u64, fd_step: f64) -> Result<C1Distance> {
        let delta = self.system.delta;
        let ds = s_jacobian(delta);
        let mut out = C1Distance::default();
        for w in self.samples(count, seed) {
            let (fw, j) = self.map_with_jacobian(&w)?;
            out.c0 = out.c0.max(fw.distance(&s_map(&w, delta)));
            out.c1_analytic = out.c1_analytic.max(spectral_norm(&sub(&j, &ds)));
            if j != ds {
                let fd = fd_jacobian_with(|v| self.map(v), &w, fd_step)?;
                out.c1_fd = out.c1_fd.max(spectral_norm(&sub(&fd, &ds)));
            }
            out.samples += 1;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct BandLayout {
    pub n_max: usize,
    pub delta_prime: f64,
    pub bands: Vec<Band>,
    /// Sampled `C^1` distance of `P` from `S` at full strength.
    pub full_strength: C1Distance,
    base: System,
}

impl BandLayout {
    /// Builds the bands from the full-strength system `sys`.
    pub fn build(sys: &System, cfg: &AssemblyConfig) -> Result<Self> {
        let full = c1_distance(sys, MapKind::P, cfg.c1_samples, cfg.seed, cfg.fd_step)?;
        let full_c1 = full.c1();
        let bands = (1..=cfg.n_max)
            .into_par_iter()
            .map(|n| {
                let (lo, hi) = band_interval(n as i64)?;
                let target = band_target(cfg.delta_prime, n);
                let bound = 5.0 * cfg.delta_prime / (n as f64).powi(2);
                let mut scale = if full_c1 > 0.0 { target / full_c1 } else { 1.0 };
                let mut band = Band {
                    index: n,
                    lo,
                    hi,
                    target,
                    scale,
                    measured: C1Distance::default(),
                    conjugated: C1Distance::default(),
                    system: sys.scaled(scale),
                };
                for _ in 0..12 {
                    band.measured = c1_distance(&band.system, MapKind::P, cfg.c1_samples, cfg.seed, cfg.fd_step)?;
                    band.conjugated = band.c1_from_base(cfg.c1_samples, cfg.seed, cfg.fd_step)?;
                    // the headroom covers sample sets other than the tuning one
                    let excess = (band.measured.c1() / target).max(band.conjugated.c1() / bound) / TUNING_HEADROOM;
                    if excess <= 1.0 {
                        break;
                    }
                    scale *= 0.95 / excess;
                    band.scale = scale;
                    band.system = sys.scaled(scale);
                }
                Ok(band)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BandLayout { n_max: cfg.n_max, delta_prime: cfg.delta_prime, bands, full_strength: full, base: sys.clone() })
    }

    pub fn delta(&self) -> f64 {
        self.base.delta
    }

    pub fn band(&self, n: usize) -> Result<&Band> {
        self.bands.get(n.wrapping_sub(1)).ok_or(Error::BadIndex(n as i64))
    }

    /// Retained band containing `z` (the one with the smaller index at a
    /// shared endpoint).
    pub fn band_of(&self, z: f64) -> Option<usize> {
        self.bands.iter().find(|b| b.contains(z)).map(|b| b.index)
    }

    pub fn band_map(&self, w: &ProductPoint, n: usize) -> Result<ProductPoint> {
        self.band(n)?.map(w)
    }

    pub fn band_map_with_jacobian(&self, w: &ProductPoint, n: usize) -> Result<(ProductPoint, Mat4)> {
        self.band(n)?.map_with_jacobian(w)
    }

    /// The global map.
    pub fn global_f(&self, w: &ProductPoint) -> Result<ProductPoint> {
        match self.band_of(w.z) {
            Some(n) => self.band_map(w, n),
            None => self.base.step(MapKind::S, w),
        }
    }

    pub fn global_f_with_jacobian(&self, w: &ProductPoint) -> Result<(ProductPoint, Mat4)> {
        match self.band_of(w.z) {
            Some(n) => self.band_map_with_jacobian(w, n),
            None => self.base.step_with_jacobian(MapKind::S, w),
        }
    }

    pub fn global_f_inverse(&self, w: &ProductPoint) -> Result<ProductPoint> {
        match self.band_of(w.z) {
            Some(n) => {
                let b = self.band(n)?;
                Ok(b.from_unit(&b.system.step_inverse(MapKind::P, &b.to_unit(w))?))
            }
            None => self.base.step_inverse(MapKind::S, w),
        }
    }

    pub fn band_samples(&self, n: usize, count: usize, seed: u64) -> Result<Vec<ProductPoint>> {
        Ok(self.band(n)?.samples(count, seed))
    }

    pub fn band_c1(&self, n: usize, count: usize, seed: u64, fd_step: f64) -> Result<C1Distance> {
        self.band(n)?.c1_from_base(count, seed, fd_step)
    }

    /// Sampled distance of the global map from the identity: the largest
    /// displacement and the largest operator norm of `Df - I` by finite
    /// differences. Points are drawn from every band and uniformly.
    pub fn distance_from_identity(&self, count: usize, seed: u64, fd_step: f64) -> Result<C1Distance> {
        let per = count / (self.bands.len() + 1).max(1);
        let mut pts: Vec<ProductPoint> = sample_points(&self.base.with_alpha(0.0), per, seed)
            .into_iter()
            .map(|(_, w)| w)
            .collect();
        for b in &self.bands {
            pts.extend(self.band_samples(b.index, per, seed ^ b.index as u64)?);
        }
        let mut out = C1Distance::default();
        for w in pts {
            let (fw, j) = self.global_f_with_jacobian(&w)?;
            out.c0 = out.c0.max(fw.distance(&w));
            out.c1_analytic = out.c1_analytic.max(spectral_norm(&sub(&j, &IDENTITY4)));
            let fd = fd_jacobian_with(|v| self.global_f(v), &w, fd_step)?;
            out.c1_fd = out.c1_fd.max(spectral_norm(&sub(&fd, &IDENTITY4)));
            out.samples += 1;
        }
        Ok(out)
    }
}

impl BandLayout {
    /// Lyapunov exponents of the global map along the orbit of `w0`.
    pub fn lyapunov(&self, w0: &ProductPoint, n_iters: usize, qr_every: usize, seed: u64) -> Result<LyapunovReport> {
        let ds = s_jacobian(self.delta());
        lyapunov_spectrum_with(|w| self.global_f_with_jacobian(w), &ds, w0, n_iters, qr_every, seed)
    }
}

fn fd_jacobian_with<F: Fn(&ProductPoint) -> Result<ProductPoint>>(f: F, w: &ProductPoint, h: f64) -> Result<Mat4> {
    let base = f(w)?;
    let mut j = [[0.0; 4]; 4];
    for k in 0..4 {
        let mut v = [0.0; 4];
        v[k] = h;
        let plus = base.body_delta(&f(&w.displace(v)?)?);
        v[k] = -h;
        let minus = base.body_delta(&f(&w.displace(v)?)?);
        for i in 0..4 {
            j[i][k] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(j)
}

fn sub(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = *a;
    for i in 0..4 {
        for k in 0..4 {
            m[i][k] -= b[i][k];
        }
    }
    m
}

/// Observables for Birkhoff averages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Observable {
    Z,
    Surface,
    Product,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Z => "z",
            Observable::Surface => "surface",
            Observable::Product => "product",
        }
    }

    pub fn eval(self, w: &ProductPoint) -> f64 {
        match self {
            Observable::Z => w.z,
            Observable::Surface => surface_observable(&w.surf),
            Observable::Product => w.z * surface_observable(&w.surf),
        }
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(Observable::Z),
            "surface" => Ok(Observable::Surface),
            "product" => Ok(Observable::Product),
            _ => Err(Error::InvalidConfig(format!("unknown observable `{s}`"))),
        }
    }
}

/// Radius of the bump of [`surface_observable`], below the inradius
/// `acosh(cot(pi/8))` of the octagon so that the bump never meets its
/// translates.
const BUMP_RADIUS: f64 = 1.5;

/// A smooth function on `M0`: a bump of the distance from the reduced base
/// point to the centre of the octagon.
pub fn surface_observable(s: &SurfacePoint) -> f64 {
    let r = s.radius() / BUMP_RADIUS;
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Number of batches of the Birkhoff error bars.
const BIRKHOFF_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BirkhoffAverage {
    pub start_index: usize,
    pub band: Option<usize>,
    pub average: f64,
    pub std_error: f64,
}

/// Time averages of `obs` along the orbits of the global map from each
/// start, with batch-means error bars. Starts run in parallel.
pub fn birkhoff_profile(
    layout: &BandLayout,
    obs: Observable,
    starts: &[ProductPoint],
    n_iters: usize,
) -> Result<Vec<BirkhoffAverage>> {
    if n_iters < BIRKHOFF_BATCHES {
        return Err(Error::InvalidConfig(format!("need at least {BIRKHOFF_BATCHES} iterations")));
    }
    let batch = n_iters / BIRKHOFF_BATCHES;
    starts
        .par_iter()
        .enumerate()
        .map(|(i, w0)| {
            let mut w = *w0;
            let mut means = Vec::with_capacity(BIRKHOFF_BATCHES);
            for _ in 0..BIRKHOFF_BATCHES {
                let mut s = 0.0;
                for _ in 0..batch {
                    w = layout.global_f(&w)?;
                    s += obs.eval(&w);
                }
                means.push(s / batch as f64);
            }
            let nb = means.len() as f64;
            let mean = means.iter().sum::<f64>() / nb;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (nb - 1.0);
            Ok(BirkhoffAverage {
                start_index: i,
                band: layout.band_of(w0.z),
                average: mean,
                std_error: (var / nb).sqrt(),
            })
        })
        .collect()
}
