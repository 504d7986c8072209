//! Construction constants and their ordering constraints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All constants of the construction. Lengths are in the units of the
/// left-invariant metric, angles in radians, `delta` in flow time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    /// Proximity-to-identity target of the assembled map.
    pub delta0: f64,
    /// Period of the anchor `p` on the closed orbit `C`; `0` selects the
    /// smallest period with `length(C)/m <= delta0/2`, starting from 8.
    pub m: usize,
    /// Per-band strength scale of the assembly.
    pub delta_prime: f64,
    pub tau: f64,
    pub k0: usize,
    /// Rotation angle of the box perturbation; `0` selects `pi / k0`.
    pub theta: f64,
    /// Twist strength of the second perturbation.
    pub alpha: f64,
    /// Flow time of the first perturbation.
    pub beta: f64,
    pub gamma: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    /// Interval coordinate of the twist centre.
    pub z_star: f64,
    pub phi0: f64,
    pub psi0: f64,
    pub xi0: f64,
    pub kappa: f64,
    #[serde(rename = "big_k")]
    pub big_k: f64,
    pub lambda: f64,
    /// Return-time horizon for the twist support.
    pub n0: usize,
    /// Midpoint steps of the first perturbation's integrator.
    pub h1_steps: usize,
    /// Word of the orbit `C` carrying the anchor `p`.
    pub c_word: Vec<usize>,
    /// Word of the second orbit `C'`.
    pub c_prime_word: Vec<usize>,
    /// Companion word used for approximating orbits of `C'`.
    pub companion_word: Vec<usize>,
    /// Power `k` of the approximating orbit used by the holonomy chain.
    pub holonomy_k: usize,
    /// Number of boxes `J`.
    pub n_boxes: usize,
    /// Centre-stable radius `s` of each box.
    pub box_radius: f64,
    /// Unstable half-width `s'` of each box.
    pub box_unstable: f64,
    /// Stable half-width `s''` of each box.
    pub box_stable: f64,
    /// Interval coordinate of the box centres.
    pub box_z: f64,
    /// Sample count of the support-overlap test run at construction.
    pub overlap_samples: usize,
    /// Seed for the twist-centre search and box placement.
    pub setup_seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            delta0: 0.2,
            m: 0,
            delta_prime: 0.005,
            tau: 0.5,
            k0: 4,
            theta: 0.0,
            alpha: 0.15,
            beta: 0.05,
            gamma: 0.01,
            eps0: 0.3,
            eps1: 0.004,
            eps2: 0.002,
            eps3: 0.005,
            eps4: 0.3,
            z_star: 0.5,
            phi0: 0.0113,
            psi0: 1.0,
            xi0: 0.02,
            kappa: 0.1,
            big_k: 10.0,
            lambda: 0.0,
            n0: 100,
            h1_steps: 32,
            c_word: vec![0],
            c_prime_word: vec![1, 3],
            companion_word: vec![1, 2],
            holonomy_k: 2,
            n_boxes: 6,
            box_radius: 0.04,
            box_unstable: 0.12,
            box_stable: 0.12,
            box_z: 0.1,
            overlap_samples: 100_000,
            setup_seed: 7,
        }
    }
}

impl PerturbationConfig {
    /// Effective rotation angle.
    pub fn theta(&self) -> f64 {
        if self.theta > 0.0 {
            self.theta
        } else {
            std::f64::consts::PI / self.k0 as f64
        }
    }

    /// Period `m` and `delta = length / m` for a closed orbit of the given
    /// length.
    pub fn resolve_delta(&self, length: f64) -> (usize, f64) {
        let m = if self.m > 0 {
            self.m
        } else {
            let mut m = 8;
            while length / m as f64 > 0.5 * self.delta0 {
                m += 1;
            }
            m
        };
        (m, length / m as f64)
    }

    /// Checks the ordering constraints that do not depend on the orbit
    /// geometry. Returns every violated constraint by name.
    pub fn violations(&self, delta: f64) -> Vec<String> {
        let mut v = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                v.push(msg.to_string());
            }
        };
        check(delta > 0.0 && delta <= 0.5 * self.delta0, "0 < delta <= delta0/2");
        check(self.tau > 0.0 && self.tau < 2.0 / 3.0, "tau in (0, 2/3)");
        check(self.k0 >= 1, "k0 >= 1");
        let th = self.theta();
        let k = self.k0 as f64;
        let pi = std::f64::consts::PI;
        check(
            (th - pi / k).abs() < 1e-12 || (th - pi / (2.0 * k)).abs() < 1e-12,
            "theta = pi/k0 (or the pi/(2 k0) variant)",
        );
        check(self.eps2 > 0.0 && self.eps2 < self.eps1, "eps2 in (0, eps1)");
        check(self.eps1 <= delta, "eps1 <= delta");
        check(self.eps4 > 0.0 && self.eps4 <= self.eps0, "eps4 <= eps0");
        check(self.eps3 > 0.0, "eps3 > 0");
        check(self.alpha >= 0.0, "alpha >= 0");
        check(self.beta >= 0.0, "beta >= 0");
        check(self.kappa > 0.0 && self.kappa < 1.0, "kappa in (0, 1)");
        check(
            self.z_star - self.eps4 > 0.0 && self.z_star + self.eps4 < 1.0,
            "twist support inside (0, 1)",
        );
        check(self.h1_steps >= 1, "h1_steps >= 1");
        check(
            self.box_unstable >= self.box_radius && self.box_stable >= self.box_radius,
            "box half-widths s', s'' >= s",
        );
        check(2.0 * self.box_radius < delta, "2 s < delta (consecutive box images disjoint)");
        check(
            self.box_z - self.box_radius > 0.0 && self.box_z + self.box_radius < 1.0,
            "boxes inside (0, 1)",
        );
        check(!self.c_word.is_empty() && !self.c_prime_word.is_empty(), "orbit words non-empty");
        v
    }

    pub fn validate(&self, delta: f64) -> Result<()> {
        let v = self.violations(delta);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }

    /// Copy with the three perturbation strengths scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut c = self.clone();
        c.alpha *= s;
        c.beta *= s;
        c.theta = self.theta() * s;
        c
    }
}
