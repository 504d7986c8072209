//! Smooth plateau and cutoff profiles built from the flat mollifier
//! `exp(-1/s)`.

use std::sync::OnceLock;

/// `exp(-1/s)` for `s > 0`, zero otherwise.
#[inline]
fn flat(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `s <= 0`, 1 for `s >= 1`, all derivatives vanish at
/// both ends.
#[inline]
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = flat(s);
        a / (a + flat(1.0 - s))
    }
}

#[inline]
pub fn smooth_step_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let a = flat(s);
    let b = flat(1.0 - s);
    let da = a / (s * s);
    let db = b / ((1.0 - s) * (1.0 - s));
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Maximum of the smooth-step derivative, attained at `s = 1/2`.
pub fn smooth_step_deriv_max() -> f64 {
    smooth_step_deriv(0.5)
}

/// `int_0^u smooth_step(s) ds` for `u in [0, 1]`, by Gauss-Legendre
/// quadrature on four panels.
pub fn smooth_step_integral(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    if u == 0.0 {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre();
    let panels = 4;
    let h = u / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        for (x, w) in nodes.iter().zip(weights) {
            total += w * smooth_step(a + 0.5 * h * (x + 1.0));
        }
    }
    0.5 * h * total
}

const GL_ORDER: usize = 40;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed once by Newton
/// iteration on the Legendre polynomial.
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Integrates `f` over `[a, b]` with composite Gauss-Legendre quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in nodes.iter().zip(weights) {
            total += w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    0.5 * h * total
}

/// The profiles used by the three perturbations.
#[derive(Clone, Debug)]
pub struct BumpSuite {
    pub eps1: f64,
    pub eps2: f64,
    pub eps4: f64,
    pub phi0: f64,
    pub psi0: f64,
    pub xi0: f64,
    pub kappa: f64,
    /// Amplitude of the negative shell of `psi` relative to its plateau.
    shell: f64,
}

impl BumpSuite {
    pub fn new(eps1: f64, eps2: f64, eps4: f64, phi0: f64, psi0: f64, xi0: f64, kappa: f64) -> Self {
        let w = 0.5 * (eps1 - eps2);
        // Plateau-and-ramp integral eps2 + w/2 balanced against the shell
        // integral w, using int_0^1 smooth_step = 1/2.
        let shell = (eps2 + 0.5 * w) / w;
        BumpSuite {
            eps1,
            eps2,
            eps4,
            phi0,
            psi0,
            xi0,
            kappa,
            shell,
        }
    }

    pub fn shell_amplitude(&self) -> f64 {
        self.shell
    }

    fn ramp(&self) -> f64 {
        0.5 * (self.eps1 - self.eps2)
    }

    // ----- phi: radial plateau profile -----

    pub fn phi(&self, r: f64) -> f64 {
        self.phi0 * (1.0 - smooth_step((r - self.eps2) / (self.eps1 - self.eps2)))
    }

    pub fn dphi(&self, r: f64) -> f64 {
        let w = self.eps1 - self.eps2;
        -self.phi0 * smooth_step_deriv((r - self.eps2) / w) / w
    }

    /// `max(|phi|, |phi'|)`.
    pub fn phi_c1_norm(&self) -> f64 {
        self.phi0
            .max(self.phi0 * smooth_step_deriv_max() / (self.eps1 - self.eps2))
    }

    // ----- rho: rescaled phi for the twist -----

    pub fn rho(&self, r: f64) -> f64 {
        self.eps4 / self.eps1 * self.phi(r * self.eps1 / self.eps4)
    }

    pub fn drho(&self, r: f64) -> f64 {
        self.dphi(r * self.eps1 / self.eps4)
    }

    // ----- psi: signed profile with vanishing one-sided integrals -----

    fn plateau(&self, r: f64) -> f64 {
        1.0 - smooth_step((r - self.eps2) / self.ramp())
    }

    fn bump(&self, r: f64) -> f64 {
        let w = self.ramp();
        smooth_step((r - self.eps2) / w) * (1.0 - smooth_step((r - self.eps2 - w) / w))
    }

    pub fn psi(&self, x: f64) -> f64 {
        let r = x.abs();
        self.psi0 * (self.plateau(r) - self.shell * self.bump(r))
    }

    pub fn dpsi(&self, x: f64) -> f64 {
        let r = x.abs();
        let w = self.ramp();
        let u = (r - self.eps2) / w;
        let v = (r - self.eps2 - w) / w;
        let dplat = -smooth_step_deriv(u) / w;
        let dbump = (smooth_step_deriv(u) * (1.0 - smooth_step(v))
            - smooth_step(u) * smooth_step_deriv(v))
            / w;
        self.psi0 * (dplat - self.shell * dbump) * x.signum()
    }

    /// `Psi(x) = int_0^x psi`.
    pub fn big_psi(&self, x: f64) -> f64 {
        let r = x.abs();
        let w = self.ramp();
        let e2 = self.eps2;
        let (p, b) = if r <= e2 {
            (r, 0.0)
        } else if r <= e2 + w {
            let u = (r - e2) / w;
            let iu = smooth_step_integral(u);
            (e2 + w * (u - iu), w * iu)
        } else if r < self.eps1 {
            let v = (r - e2 - w) / w;
            (e2 + 0.5 * w, 0.5 * w + w * (v - smooth_step_integral(v)))
        } else {
            return 0.0;
        };
        self.psi0 * (p - self.shell * b) * x.signum()
    }

    pub fn psi_c1_norm(&self) -> f64 {
        let n = 4000;
        (0..=n)
            .map(|i| {
                let x = self.eps1 * i as f64 / n as f64;
                self.psi(x).abs().max(self.dpsi(x).abs())
            })
            .fold(0.0, f64::max)
    }

    // ----- xi: interval profile, flat at 0 and 1 -----

    pub fn xi(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= 1.0 {
            return 0.0;
        }
        let q = z * (1.0 - z);
        self.xi0 * (4.0 - 1.0 / q).exp()
    }

    pub fn dxi(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= 1.0 {
            return 0.0;
        }
        let q = z * (1.0 - z);
        self.xi(z) * (1.0 - 2.0 * z) / (q * q)
    }

    pub fn ddxi(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= 1.0 {
            return 0.0;
        }
        let q = z * (1.0 - z);
        let dq = 1.0 - 2.0 * z;
        let l1 = dq / (q * q);
        let l2 = -2.0 / (q * q) - 2.0 * dq * dq / (q * q * q);
        self.xi(z) * (l1 * l1 + l2)
    }

    pub fn xi_c1_norm(&self) -> f64 {
        let n = 4000;
        (1..n)
            .map(|i| {
                let z = i as f64 / n as f64;
                self.xi(z).abs().max(self.dxi(z).abs())
            })
            .fold(0.0, f64::max)
    }

    // ----- zeta: cutoff plateaus for the box rotations -----

    /// `zeta_1`: 1 on `[0, 1 - kappa]`, 0 on `[1, inf)`.
    pub fn zeta1(&self, s: f64) -> f64 {
        1.0 - smooth_step((s - (1.0 - self.kappa)) / self.kappa)
    }

    pub fn dzeta1(&self, s: f64) -> f64 {
        -smooth_step_deriv((s - (1.0 - self.kappa)) / self.kappa) / self.kappa
    }

    /// `zeta_r(s) = 1` for `s < r - 1`, `zeta_1(s - r + 1)` beyond.
    pub fn zeta(&self, r: f64, s: f64) -> f64 {
        if s < r - 1.0 {
            1.0
        } else {
            self.zeta1(s - r + 1.0)
        }
    }

    pub fn dzeta(&self, r: f64, s: f64) -> f64 {
        if s < r - 1.0 {
            0.0
        } else {
            self.dzeta1(s - r + 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn suite() -> BumpSuite {
        BumpSuite::new(0.004, 0.002, 0.3, 0.01, 1.0, 0.02, 0.1)
    }

    #[test]
    fn smooth_step_integral_is_half() {
        assert!((smooth_step_integral(1.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn psi_integral_vanishes() {
        let s = suite();
        let right = integrate(|x| s.psi(x), 0.0, s.eps1, 64);
        let left = integrate(|x| s.psi(x), -s.eps1, 0.0, 64);
        assert!(right.abs() < 1e-10 * s.eps1, "{right}");
        assert!(left.abs() < 1e-10 * s.eps1, "{left}");
        assert!(s.big_psi(s.eps1 * 0.9999).abs() < 1e-12);
    }

    #[test]
    fn big_psi_is_antiderivative() {
        let s = suite();
        for &x in &[0.0005, 0.0021, 0.0025, 0.0031, 0.0037, -0.0029] {
            let q = integrate(|u| s.psi(u), 0.0, x, 32);
            assert!((s.big_psi(x) - q).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = suite();
        let h = 1e-8;
        for &x in &[0.0023, 0.0027, 0.0033] {
            let fd = (s.psi(x + h) - s.psi(x - h)) / (2.0 * h);
            assert!((fd - s.dpsi(x)).abs() < 1e-4 * s.dpsi(x).abs().max(1.0));
            let fd = (s.phi(x + h) - s.phi(x - h)) / (2.0 * h);
            assert!((fd - s.dphi(x)).abs() < 1e-4 * s.dphi(x).abs().max(1.0));
        }
        for &z in &[0.2, 0.5, 0.77] {
            let hz = 1e-6;
            let fd = (s.dxi(z + hz) - s.dxi(z - hz)) / (2.0 * hz);
            assert!((fd - s.ddxi(z)).abs() < 1e-6);
        }
    }
}
