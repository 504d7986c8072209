//! Assembly of the orbit data, the three perturbations and the composed
//! maps `R = h1 S`, `Q = h1 S h2`, `P = Q h3`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::access::heteroclinic::{find_heteroclinics, HeteroclinicPair, Window};
use crate::error::{Error, Result};
use crate::hyperbolic::{ClosedOrbit, SurfacePoint};
use crate::product::{mat_mul, s_jacobian, s_map, ChartPoint, Mat4, ProductPoint};

use super::bumps::BumpSuite;
use super::config::PerturbationConfig;
use super::h1::H1;
use super::h2::H2;
use super::h3::BoxFamily;

/// Which of the four maps to iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapKind {
    S,
    R,
    Q,
    P,
}

impl MapKind {
    pub const ALL: [MapKind; 4] = [MapKind::S, MapKind::R, MapKind::Q, MapKind::P];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::S => "S",
            MapKind::R => "R",
            MapKind::Q => "Q",
            MapKind::P => "P",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" => Ok(MapKind::S),
            "R" | "r" => Ok(MapKind::R),
            "Q" | "q" => Ok(MapKind::Q),
            "P" | "p" => Ok(MapKind::P),
            _ => Err(Error::InvalidConfig(format!("unknown map '{s}'"))),
        }
    }
}

/// The closed orbits, the anchor `p` and the heteroclinic data.
#[derive(Clone, Debug)]
pub struct OrbitData {
    pub c: ClosedOrbit,
    pub c_prime: ClosedOrbit,
    /// Approximating orbit of `C'` used by the holonomy chain.
    pub c_eps: ClosedOrbit,
    pub p: SurfacePoint,
    pub m: usize,
    pub delta: f64,
    pub hetero: HeteroclinicPair,
    /// Number of returns of `q1` to `p` spent outside `B(p, eps1)`.
    pub ell: usize,
    /// Sampled distance between `C` and `C'`.
    pub separation: f64,
}

impl OrbitData {
    pub fn build(cfg: &PerturbationConfig) -> Result<Self> {
        let c = ClosedOrbit::from_word(&cfg.c_word)?;
        let c_prime = ClosedOrbit::from_word(&cfg.c_prime_word)?;
        let c_eps = c_prime.approximating(cfg.holonomy_k.max(1), &cfg.companion_word)?;
        let (m, delta) = cfg.resolve_delta(c.length());
        let p = c.base_point();
        let separation = c.min_distance_to(&c_prime, 200)?;
        let window = Window { min: 2.0 * cfg.eps1, max: cfg.eps0.max(2.0 * cfg.eps1) };
        let hetero = find_heteroclinics(&p, &c_prime, window, window, delta, cfg.eps0)?;
        let ell = Self::return_count(hetero.q1.from_p.abs(), c.length(), cfg.eps1)
            .ok_or_else(|| Error::Construction("q1 starts inside B(p, eps1)".into()))?;
        Ok(OrbitData { c, c_prime, c_eps, p, m, delta, hetero, ell, separation })
    }

    /// Smallest `l >= 1` with `|x| e^{-l L} >= eps1 > |x| e^{-(l+1) L}`:
    /// the horocycle parameter of `G^{-km} q1` is `x e^{-k L}`.
    fn return_count(x: f64, length: f64, eps1: f64) -> Option<usize> {
        (1..200).find(|&l| {
            let a = x * (-(l as f64) * length).exp();
            let b = x * (-((l + 1) as f64) * length).exp();
            a >= eps1 && b < eps1
        })
    }

    /// Horocycle parameter of `G^{-k m} q1` relative to `p`.
    pub fn q1_return(&self, k: usize) -> f64 {
        self.hetero.q1.from_p * (-(k as f64) * self.c.length()).exp()
    }

    /// Horocycle parameter of `G^{k m} q2` relative to `p`.
    pub fn q2_return(&self, k: usize) -> f64 {
        self.hetero.q2.from_p * (-(k as f64) * self.c.length()).exp()
    }
}

/// Summary of the support-overlap test.
#[derive(Clone, Debug, Default)]
pub struct OverlapReport {
    pub samples: usize,
    pub violations: usize,
    pub detail: Vec<String>,
}

/// The full perturbed system.
#[derive(Clone, Debug)]
pub struct System {
    pub cfg: PerturbationConfig,
    pub orbit: OrbitData,
    pub suite: BumpSuite,
    pub h1: H1,
    pub h2: H2,
    pub boxes: BoxFamily,
    pub delta: f64,
}

/// Clearance required between the support of a perturbation and the orbit
/// tubes of radius `eps0`.
fn clear(d: f64, eps0: f64, reach: f64) -> bool {
    d > eps0 + reach
}

impl System {
    pub fn build(cfg: &PerturbationConfig) -> Result<Self> {
        let orbit = OrbitData::build(cfg)?;
        cfg.validate(orbit.delta)?;
        Self::from_orbit(cfg, orbit)
    }

    /// Builds with a precomputed orbit (the orbit data depend only on the
    /// words, the period and the `eps` window).
    pub fn from_orbit(cfg: &PerturbationConfig, orbit: OrbitData) -> Result<Self> {
        let delta = orbit.delta;
        let suite = BumpSuite::new(cfg.eps1, cfg.eps2, cfg.eps4, cfg.phi0, cfg.psi0, cfg.xi0, cfg.kappa);
        let p = ProductPoint::new(orbit.p, 0.0);
        let h1 = H1::new(&p, suite.clone(), cfg.beta, cfg.h1_steps);
        let center = Self::find_twist_center(cfg, &orbit)?;
        let h2 = H2::new(&center, suite.clone(), cfg.alpha);
        let half = [cfg.box_unstable, cfg.box_stable, cfg.box_radius];
        let centers = Self::place_boxes(cfg, &orbit, half)?;
        let boxes = BoxFamily::new(&centers, cfg.k0, delta, half, cfg.theta());
        let sys = System { cfg: cfg.clone(), orbit, suite, h1, h2, boxes, delta };
        if cfg.overlap_samples > 0 {
            let rep = sys.overlap_check(cfg.overlap_samples, cfg.setup_seed);
            if rep.violations > 0 {
                return Err(Error::SupportOverlap(rep.detail.join("; ")));
            }
        }
        Ok(sys)
    }

    /// Metric radius of the twist support around its centre.
    pub fn twist_reach(cfg: &PerturbationConfig) -> f64 {
        cfg.eps4 * (1.0 + std::f64::consts::SQRT_2)
    }

    /// Twist centre: among candidates drawn with the setup seed, the one
    /// farthest from `C`, `C'` and `C_eps`, subject to the clearance.
    fn find_twist_center(cfg: &PerturbationConfig, orbit: &OrbitData) -> Result<ProductPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.setup_seed);
        rng.set_stream(1);
        let reach = Self::twist_reach(cfg);
        let mut best: Option<(f64, SurfacePoint)> = None;
        for _ in 0..256 {
            let s = SurfacePoint::random(&mut rng);
            let d = orbit
                .c
                .distance_to(&s)
                .min(orbit.c_prime.distance_to(&s))
                .min(orbit.c_eps.distance_to(&s));
            if best.as_ref().map_or(true, |(b, _)| d > *b) {
                best = Some((d, s));
            }
        }
        let (d, s) = best.expect("candidates drawn");
        if !clear(d, cfg.eps0, reach) {
            return Err(Error::Construction(format!(
                "no twist centre with clearance {:.3} from the orbit tubes (best {:.3})",
                cfg.eps0 + reach,
                d
            )));
        }
        Ok(ProductPoint::new(s, cfg.z_star))
    }

    /// Greedy box placement along an `S` orbit at height `box_z`.
    fn place_boxes(
        cfg: &PerturbationConfig,
        orbit: &OrbitData,
        half: [f64; 3],
    ) -> Result<Vec<ProductPoint>> {
        if cfg.n_boxes == 0 || cfg.k0 == 0 {
            return Ok(Vec::new());
        }
        let delta = orbit.delta;
        let z = cfg.box_z;
        if (z - cfg.z_star).abs() < cfg.eps4 + cfg.box_radius {
            return Err(Error::Construction("box height inside the twist slab".into()));
        }
        let top = (cfg.k0 as f64 - 1.0) * delta;
        // reach of the largest image around its own centre
        let reach = half[0] * top.exp() + half[1] + half[2] * std::f64::consts::SQRT_2;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.setup_seed);
        rng.set_stream(2);
        let mut cur = SurfacePoint::random(&mut rng);
        let mut accepted: Vec<ProductPoint> = Vec::new();
        let stride = 37.0 * delta;
        for _ in 0..4000 {
            cur = cur.flow(stride + rng.gen_range(0.0..delta))?;
            let tube = orbit
                .c
                .distance_to(&cur)
                .min(orbit.c_prime.distance_to(&cur))
                .min(orbit.c_eps.distance_to(&cur));
            if !clear(tube, cfg.eps0, reach + top) {
                continue;
            }
            let far = accepted.iter().all(|a| {
                // distance between any two frames of the towers
                let d = tower_distance(&a.surf, &cur, top);
                d > 2.0 * reach
            });
            if far {
                accepted.push(ProductPoint::new(cur, z));
                if accepted.len() == cfg.n_boxes {
                    return Ok(accepted);
                }
            }
        }
        Err(Error::Construction(format!(
            "placed only {} of {} boxes",
            accepted.len(),
            cfg.n_boxes
        )))
    }

    /// Samples the supports of `h2` and of every box and checks that no
    /// sample lies in another support.
    pub fn overlap_check(&self, n: usize, seed: u64) -> OverlapReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        let mut rep = OverlapReport::default();
        let parts = 1 + self.boxes.len();
        let per = n.div_ceil(parts);
        let e4 = self.cfg.eps4;
        // twist support
        for _ in 0..per {
            let c = ChartPoint::new(
                rng.gen_range(-e4..e4),
                rng.gen_range(-e4..e4),
                rng.gen_range(-e4..e4),
                rng.gen_range(-e4..e4),
            );
            if !self.h2.in_support(&c) {
                continue;
            }
            rep.samples += 1;
            let w = self.h2.chart().to_manifold_unchecked(&c);
            if self.in_h1_support(&w) {
                rep.violations += 1;
                rep.detail.push("twist support meets the h1 column".into());
            }
            if self.boxes.locate(&w).is_some() {
                rep.violations += 1;
                rep.detail.push("twist support meets a box".into());
            }
        }
        for (k, b) in self.boxes.boxes.iter().enumerate() {
            let h = b.chart().half_widths();
            for _ in 0..per {
                let c = ChartPoint::new(
                    rng.gen_range(-h[0]..h[0]),
                    rng.gen_range(-h[1]..h[1]),
                    rng.gen_range(-h[2]..h[2]),
                    rng.gen_range(-h[2]..h[2]),
                );
                if !b.in_support(&c) {
                    continue;
                }
                rep.samples += 1;
                let w = b.chart().to_manifold_unchecked(&c);
                if self.in_h1_support(&w) {
                    rep.violations += 1;
                    rep.detail.push(format!("box {k} meets the h1 column"));
                }
                for (k2, b2) in self.boxes.boxes.iter().enumerate() {
                    if k2 == k {
                        continue;
                    }
                    if let Some(c2) = b2.chart().locate(&w) {
                        if b2.in_support(&c2) {
                            rep.violations += 1;
                            rep.detail.push(format!("boxes {k} and {k2} overlap"));
                        }
                    }
                }
            }
        }
        rep.detail.sort();
        rep.detail.dedup();
        rep
    }

    pub fn in_h1_support(&self, w: &ProductPoint) -> bool {
        self.h1
            .chart()
            .locate(w)
            .is_some_and(|c| self.h1.in_support(&c))
    }

    pub fn in_h2_support(&self, w: &ProductPoint) -> bool {
        self.h2.z_may_hit(w.z)
            && self
                .h2
                .chart()
                .locate(w)
                .is_some_and(|c| self.h2.in_support(&c))
    }

    pub fn in_box(&self, w: &ProductPoint) -> bool {
        self.boxes.locate(w).is_some()
    }

    /// Anchor `p x {z}`.
    pub fn anchor(&self, z: f64) -> ProductPoint {
        ProductPoint::new(self.orbit.p, z)
    }

    fn s(&self, w: &ProductPoint, dir: f64) -> ProductPoint {
        s_map(w, dir * self.delta)
    }

    /// One step of the chosen map.
    pub fn step(&self, kind: MapKind, w: &ProductPoint) -> Result<ProductPoint> {
        match kind {
            MapKind::S => Ok(self.s(w, 1.0)),
            MapKind::R => self.h1.apply(&self.s(w, 1.0), 1.0),
            MapKind::Q => self.h1.apply(&self.s(&self.h2.apply(w, 1.0), 1.0), 1.0),
            MapKind::P => {
                let a = self.boxes.apply(w, 1.0, &self.suite);
                self.h1.apply(&self.s(&self.h2.apply(&a, 1.0), 1.0), 1.0)
            }
        }
    }

    /// One step of the inverse map.
    pub fn step_inverse(&self, kind: MapKind, w: &ProductPoint) -> Result<ProductPoint> {
        match kind {
            MapKind::S => Ok(self.s(w, -1.0)),
            MapKind::R => Ok(self.s(&self.h1.apply(w, -1.0)?, -1.0)),
            MapKind::Q => Ok(self.h2.apply(&self.s(&self.h1.apply(w, -1.0)?, -1.0), -1.0)),
            MapKind::P => {
                let a = self.h2.apply(&self.s(&self.h1.apply(w, -1.0)?, -1.0), -1.0);
                Ok(self.boxes.apply(&a, -1.0, &self.suite))
            }
        }
    }

    /// One step and its body-frame Jacobian.
    pub fn step_with_jacobian(&self, kind: MapKind, w: &ProductPoint) -> Result<(ProductPoint, Mat4)> {
        let ds = s_jacobian(self.delta);
        match kind {
            MapKind::S => Ok((self.s(w, 1.0), ds)),
            MapKind::R => {
                let a = self.s(w, 1.0);
                let (b, j1) = self.h1.apply_with_jacobian(&a, 1.0)?;
                Ok((b, mat_mul(&j1, &ds)))
            }
            MapKind::Q => {
                let (a, j2) = self.h2.apply_with_jacobian(w, 1.0);
                let b = self.s(&a, 1.0);
                let (c, j1) = self.h1.apply_with_jacobian(&b, 1.0)?;
                Ok((c, mat_mul(&j1, &mat_mul(&ds, &j2))))
            }
            MapKind::P => {
                let (a0, j3) = self.boxes.apply_with_jacobian(w, 1.0, &self.suite);
                let (a, j2) = self.h2.apply_with_jacobian(&a0, 1.0);
                let b = self.s(&a, 1.0);
                let (c, j1) = self.h1.apply_with_jacobian(&b, 1.0)?;
                Ok((c, mat_mul(&j1, &mat_mul(&ds, &mat_mul(&j2, &j3)))))
            }
        }
    }

    /// Like [`System::step_with_jacobian`], also returning the change
    /// `t' - t` of the flow coordinate of the box chart in which the third
    /// perturbation acted (zero when it did not act).
    pub fn step_with_jacobian_detail(&self, kind: MapKind, w: &ProductPoint) -> Result<(ProductPoint, Mat4, f64)> {
        if kind != MapKind::P {
            let (out, j) = self.step_with_jacobian(kind, w)?;
            return Ok((out, j, 0.0));
        }
        let ds = s_jacobian(self.delta);
        let (a0, j3, shift) = self.boxes.apply_with_jacobian_detail(w, 1.0, &self.suite);
        let (a, j2) = self.h2.apply_with_jacobian(&a0, 1.0);
        let b = self.s(&a, 1.0);
        let (c, j1) = self.h1.apply_with_jacobian(&b, 1.0)?;
        Ok((c, mat_mul(&j1, &mat_mul(&ds, &mat_mul(&j2, &j3))), shift))
    }

    /// Body-frame Jacobian of one step.
    pub fn step_jacobian(&self, kind: MapKind, w: &ProductPoint) -> Result<Mat4> {
        Ok(self.step_with_jacobian(kind, w)?.1)
    }

    /// The same system with `h1` rebuilt for a different flow time.
    pub fn with_beta(&self, beta: f64) -> System {
        let mut s = self.clone();
        s.cfg.beta = beta;
        s.h1 = H1::new(&ProductPoint::new(self.orbit.p, 0.0), self.suite.clone(), beta, self.cfg.h1_steps);
        s
    }

    /// The same system with the twist strength replaced.
    pub fn with_alpha(&self, alpha: f64) -> System {
        let mut s = self.clone();
        s.cfg.alpha = alpha;
        s.h2 = H2::new(&self.h2.center(), self.suite.clone(), alpha);
        s
    }

    /// The same system with the three strengths scaled by `f`.
    pub fn scaled(&self, f: f64) -> System {
        let mut s = self.with_beta(self.cfg.beta * f).with_alpha(self.cfg.alpha * f);
        s.boxes.theta = self.boxes.theta * f;
        s
    }
}

/// Lower bound for the distance between any two frames of the orbit
/// segments of length `top` starting at `a` and `b`.
fn tower_distance(a: &SurfacePoint, b: &SurfacePoint, top: f64) -> f64 {
    let n = ((top / 0.05).ceil() as usize).max(1);
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let s = top * i as f64 / n as f64;
        let Ok(bs) = b.flow(s) else { continue };
        best = best.min(a.distance(&bs));
        let Ok(as_) = a.flow(s) else { continue };
        best = best.min(as_.distance(b));
    }
    // frames between samples are within half a sample spacing
    (best - 0.5 * top / n as f64).max(0.0)
}
