use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nuhyp_core::assembly::{
    band_bound, band_interval, band_stretch, band_target, birkhoff_profile, surface_observable, AssemblyConfig,
    BandLayout, Observable,
};
use nuhyp_core::hyperbolic::{GroupElement, SurfacePoint};
use nuhyp_core::perturb::{MapKind, PerturbationConfig, System};
use nuhyp_core::product::{s_jacobian, ProductPoint};
use nuhyp_core::Error;

fn system() -> &'static System {
    static SYS: OnceLock<System> = OnceLock::new();
    SYS.get_or_init(|| System::build(&PerturbationConfig::default()).expect("default system builds"))
}

fn layout() -> &'static BandLayout {
    static L: OnceLock<BandLayout> = OnceLock::new();
    L.get_or_init(|| {
        let cfg = AssemblyConfig { n_max: 3, c1_samples: 500, ..AssemblyConfig::default() };
        BandLayout::build(system(), &cfg).expect("layout builds")
    })
}

fn point_at(rng: &mut ChaCha8Rng, z: f64) -> ProductPoint {
    ProductPoint::new(SurfacePoint::random(rng), z)
}

#[test]
fn interval_table() {
    let want = [
        (1, 1.0 - 1.0 / 2.0, 1.0 - 1.0 / 3.0, 6.0),
        (2, 1.0 / 3.0, 1.0 / 2.0, 6.0),
        (3, 1.0 - 1.0 / 3.0, 1.0 - 1.0 / 4.0, 12.0),
        (4, 1.0 / 4.0, 1.0 / 3.0, 12.0),
        (5, 1.0 - 1.0 / 4.0, 1.0 - 1.0 / 5.0, 20.0),
        (6, 1.0 / 5.0, 1.0 / 4.0, 20.0),
    ];
    for (n, lo, hi, stretch) in want {
        let (a, b) = band_interval(n).unwrap();
        assert_eq!((a, b), (lo, hi), "band {n}");
        assert_eq!(band_stretch(n).unwrap(), stretch);
        assert!(((b - a) * stretch - 1.0).abs() < 1e-14);
    }
    assert_eq!(band_target(0.005, 2), 0.005 / 16.0);
    assert!((band_bound(0.005, 2) - 1.2 * 5.0 * 0.005 / 4.0).abs() < 1e-18);
}

#[test]
fn nonpositive_band_index_is_rejected() {
    for n in [0, -1, -7] {
        assert!(matches!(band_interval(n), Err(Error::BadIndex(m)) if m == n));
        assert!(matches!(band_stretch(n), Err(Error::BadIndex(_))));
    }
    let l = layout();
    assert!(matches!(l.band(0), Err(Error::BadIndex(0))));
    assert!(matches!(l.band(l.n_max + 1), Err(Error::BadIndex(_))));
}

#[test]
fn band_map_outside_its_interval_is_rejected() {
    let l = layout();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = point_at(&mut rng, 0.1);
    assert!(matches!(l.band_map(&w, 1), Err(Error::BandMismatch { band: 1, .. })));
    assert!(matches!(l.band_map_with_jacobian(&w, 2), Err(Error::BandMismatch { band: 2, .. })));
}

#[test]
fn no_bands_gives_s() {
    let cfg = AssemblyConfig { n_max: 0, c1_samples: 100, ..AssemblyConfig::default() };
    let l = BandLayout::build(system(), &cfg).unwrap();
    assert!(l.bands.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let w = ProductPoint::random(&mut rng);
        assert_eq!(l.global_f(&w).unwrap(), system().step(MapKind::S, &w).unwrap());
    }
}

#[test]
fn outside_bands_and_on_band_edges_the_map_is_s() {
    let l = layout();
    let sys = system();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut zs = vec![0.0, 1.0, 0.05, 0.95];
    for b in &l.bands {
        zs.push(b.lo);
        zs.push(b.hi);
    }
    for z in zs {
        for _ in 0..100 {
            let w = point_at(&mut rng, z);
            let f = l.global_f(&w).unwrap();
            assert_eq!(f.z.to_bits(), z.to_bits(), "z = {z}");
            assert_eq!(f.surf, sys.step(MapKind::S, &w).unwrap().surf);
            let (_, j) = l.global_f_with_jacobian(&w).unwrap();
            assert_eq!(j, s_jacobian(sys.delta));
        }
    }
}

#[test]
fn bands_are_invariant_and_the_map_inverts() {
    let l = layout();
    for b in &l.bands {
        for w in b.samples(300, 4) {
            assert!(b.contains(w.z));
            let f = l.global_f(&w).unwrap();
            assert!(b.contains(f.z), "band {}: {} left [{}, {}]", b.index, f.z, b.lo, b.hi);
            let back = l.global_f_inverse(&f).unwrap();
            assert!(back.distance(&w) < 1e-9);
        }
    }
}

#[test]
fn band_jacobian_matches_differences() {
    let l = layout();
    let h = 1e-7;
    for b in &l.bands {
        for w in b.samples(40, 5) {
            let (fw, j) = b.map_with_jacobian(&w).unwrap();
            for k in 0..4 {
                let mut v = [0.0; 4];
                v[k] = h;
                let plus = w.displace(v).unwrap();
                v[k] = -h;
                let minus = w.displace(v).unwrap();
                if !b.contains(plus.z) || !b.contains(minus.z) {
                    continue;
                }
                let dp = fw.body_delta(&b.map(&plus).unwrap());
                let dm = fw.body_delta(&b.map(&minus).unwrap());
                for i in 0..4 {
                    let fd = (dp[i] - dm[i]) / (2.0 * h);
                    assert!((fd - j[i][k]).abs() < 1e-5, "band {} [{i}][{k}]: {fd} vs {}", b.index, j[i][k]);
                }
            }
        }
    }
}

#[test]
fn tuned_strengths_respect_the_targets() {
    let l = layout();
    let mut prev = f64::INFINITY;
    for b in &l.bands {
        assert!(b.measured.c1() <= b.target);
        assert!(b.conjugated.c1() <= 5.0 * l.delta_prime / (b.index as f64).powi(2));
        assert!(b.scale > 0.0 && b.scale < prev);
        prev = b.scale;
    }
}

#[test]
fn observables() {
    assert_eq!("z".parse::<Observable>().unwrap(), Observable::Z);
    assert_eq!("surface".parse::<Observable>().unwrap(), Observable::Surface);
    assert_eq!("product".parse::<Observable>().unwrap(), Observable::Product);
    assert!(matches!("mass".parse::<Observable>(), Err(Error::InvalidConfig(_))));
    let centre = SurfacePoint::from_lift(&GroupElement::IDENTITY).unwrap();
    assert!((surface_observable(&centre) - 1.0).abs() < 1e-15);
    let far = SurfacePoint::from_lift(&GroupElement::flow(1.6)).unwrap();
    if far.radius() >= 1.5 {
        assert_eq!(surface_observable(&far), 0.0);
    }
    let w = ProductPoint::new(centre, 0.25);
    assert_eq!(Observable::Product.eval(&w), 0.25);
}

#[test]
fn birkhoff_averages_stay_in_the_band_and_repeat() {
    let l = layout();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = l.band(2).unwrap();
    let starts: Vec<_> = (0..4)
        .map(|_| {
            let z = b.lo + rng.gen_range(0.1..0.9) * b.len();
            point_at(&mut rng, z)
        })
        .collect();
    let a = birkhoff_profile(l, Observable::Z, &starts, 2000).unwrap();
    let again = birkhoff_profile(l, Observable::Z, &starts, 2000).unwrap();
    for (x, y) in a.iter().zip(&again) {
        assert_eq!(x.average, y.average);
        assert_eq!(x.band, Some(2));
        assert!(b.contains(x.average));
    }
    assert!(matches!(birkhoff_profile(l, Observable::Z, &starts, 5), Err(Error::InvalidConfig(_))));
}

proptest! {
    #[test]
    fn intervals_tile_the_open_interval(n in 1i64..400) {
        let (lo, hi) = band_interval(n).unwrap();
        prop_assert!(0.0 < lo && lo < hi && hi < 1.0);
        // hi - lo cancels near 1, losing a few ulps of 1 per unit of stretch
        let stretch = band_stretch(n).unwrap();
        prop_assert!(((hi - lo) * stretch - 1.0).abs() < 4.0 * f64::EPSILON * stretch);
        // consecutive bands of the same parity share an endpoint
        let (lo2, hi2) = band_interval(n + 2).unwrap();
        if n % 2 == 0 {
            prop_assert!((hi2 - lo).abs() < 1e-15);
        } else {
            prop_assert!((lo2 - hi).abs() < 1e-15);
        }
    }
}
