use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nuhyp_core::cocycle::{
    expansion_integral, fd_jacobian, lyapunov_spectrum, sample_points, sum_invariant_check, twisted_only,
    unstable_slope, SlopeOptions,
};
use nuhyp_core::perturb::{MapKind, PerturbationConfig, System};
use nuhyp_core::product::{det4, s_jacobian, ProductPoint};
use nuhyp_core::Error;

fn system() -> &'static System {
    static SYS: OnceLock<System> = OnceLock::new();
    SYS.get_or_init(|| System::build(&PerturbationConfig::default()).expect("default system builds"))
}

fn start(seed: u64, z: f64) -> ProductPoint {
    let mut w = ProductPoint::random(&mut ChaCha8Rng::seed_from_u64(seed));
    w.z = z;
    w
}

#[test]
fn s_cocycle_is_the_exact_diagonal() {
    let sys = system();
    let ds = s_jacobian(sys.delta);
    assert_eq!(ds[0][0], sys.delta.exp());
    assert_eq!(ds[1][1], (-sys.delta).exp());
    for (_, w) in sample_points(sys, 200, 1) {
        assert_eq!(sys.step_jacobian(MapKind::S, &w).unwrap(), ds);
    }
}

#[test]
fn off_support_jacobians_equal_that_of_s() {
    let sys = system();
    let ds = s_jacobian(sys.delta);
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    while checked < 200 {
        let w = ProductPoint::random(&mut rng);
        let sw = sys.step(MapKind::S, &w).unwrap();
        if sys.in_box(&w) || sys.in_h2_support(&w) || sys.in_h1_support(&sw) {
            continue;
        }
        checked += 1;
        for kind in [MapKind::R, MapKind::Q, MapKind::P] {
            assert_eq!(sys.step_jacobian(kind, &w).unwrap(), ds, "{kind}");
        }
    }
}

#[test]
fn analytic_jacobians_match_finite_differences() {
    let sys = system();
    let ds = s_jacobian(sys.delta);
    for kind in [MapKind::R, MapKind::Q, MapKind::P] {
        let mut nontrivial = 0;
        for (_, w) in sample_points(sys, 100, 3) {
            let j = sys.step_jacobian(kind, &w).unwrap();
            let fd = fd_jacobian(sys, kind, &w, 1e-6).unwrap();
            let scale = j.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..4 {
                for k in 0..4 {
                    assert!((j[i][k] - fd[i][k]).abs() < 1e-5 * scale, "{kind} [{i}][{k}]: {} vs {}", j[i][k], fd[i][k]);
                }
            }
            assert!((det4(&j) - 1.0).abs() < 1e-6);
            nontrivial += usize::from(j != ds);
        }
        assert!(nontrivial > 10, "{kind}: only {nontrivial} samples met a support");
    }
}

#[test]
fn s_exponents() {
    let sys = system();
    for seed in [1, 2] {
        let rep = lyapunov_spectrum(sys, MapKind::S, &start(seed, 0.3), 10_000, 10, seed).unwrap();
        let want = [sys.delta, -sys.delta, 0.0, 0.0];
        for k in 0..4 {
            assert!((rep.exponents[k] - want[k]).abs() < 1e-9, "{:?}", rep.exponents);
        }
        assert_eq!(rep.perturbed_fraction, 0.0);
    }
}

#[test]
fn exponent_sums_vanish_and_runs_are_deterministic() {
    let sys = system();
    for kind in [MapKind::R, MapKind::Q, MapKind::P] {
        let w0 = start(4, 0.5);
        let a = lyapunov_spectrum(sys, kind, &w0, 20_000, 10, 4).unwrap();
        assert!(a.sum().abs() < 1e-6, "{kind}: {}", a.sum());
        let b = lyapunov_spectrum(sys, kind, &w0, 20_000, 10, 4).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn exponents_do_not_depend_on_the_orthonormalisation_period() {
    let sys = system();
    let w0 = start(5, sys.cfg.z_star);
    let base = lyapunov_spectrum(sys, MapKind::Q, &w0, 20_000, 1, 5).unwrap();
    for qr in [5, 20] {
        let rep = lyapunov_spectrum(sys, MapKind::Q, &w0, 20_000, qr, 5).unwrap();
        for k in 0..4 {
            let tol = 2.0 * base.std_errors[k].max(rep.std_errors[k]) + 1e-12;
            assert!((rep.exponents[k] - base.exponents[k]).abs() <= tol, "qr {qr}, k {k}");
        }
    }
}

#[test]
fn invalid_lyapunov_arguments() {
    let sys = system();
    let w0 = start(6, 0.5);
    for qr in [0, 101] {
        assert!(matches!(lyapunov_spectrum(sys, MapKind::Q, &w0, 1000, qr, 1), Err(Error::InvalidConfig(_))));
    }
    assert!(matches!(lyapunov_spectrum(sys, MapKind::Q, &w0, 5, 1, 1), Err(Error::InvalidConfig(_))));
}

#[test]
fn slope_vanishes_without_twist() {
    let sys = twisted_only(system(), 0.0);
    for (_, w) in sample_points(&sys, 50, 7) {
        assert_eq!(unstable_slope(&sys, &w, SlopeOptions::default()).unwrap(), 0.0);
    }
}

#[test]
fn slope_is_invariant_under_the_cocycle() {
    let sys = twisted_only(system(), 0.1);
    let opts = SlopeOptions::default();
    let mut twisted = 0;
    for (_, w) in sample_points(&sys, 200, 8) {
        let Ok(a) = unstable_slope(&sys, &w, opts) else { continue };
        let j = sys.step_jacobian(MapKind::Q, &w).unwrap();
        let (u, n) = (j[0][0] + j[0][3] * a, j[3][0] + j[3][3] * a);
        let next = sys.step(MapKind::Q, &w).unwrap();
        let b = unstable_slope(&sys, &next, opts).unwrap();
        assert!((n / u - b).abs() < 1e-8, "{} vs {b}", n / u);
        twisted += usize::from(a != 0.0);
    }
    assert!(twisted > 0);
}

#[test]
fn expansion_integral_without_twist_is_delta() {
    let sys = system();
    let est = expansion_integral(sys, 0.0, 2000, 9).unwrap();
    assert!((est.value - sys.delta).abs() < 1e-12, "{}", est.value);
    assert_eq!(est.excluded_fraction, 0.0);
}

#[test]
fn determinant_identities() {
    let sys = system();
    for kind in [MapKind::S, MapKind::R, MapKind::Q, MapKind::P] {
        let rep = sum_invariant_check(sys, kind, 10_000, 10, 1e-8).unwrap();
        assert!(rep.passed(), "{kind}: {rep:?}");
        if kind == MapKind::S {
            assert_eq!(rep.max_ucn, 0.0);
            assert_eq!(rep.max_un, 0.0);
        } else {
            assert!(rep.nontrivial > 0);
        }
    }
}
