use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nuhyp_core::hyperbolic::{surface_group, ClosedOrbit, GroupElement, HorocycleKind, SurfacePoint};
use nuhyp_core::Error;

fn point(seed: u64) -> SurfacePoint {
    SurfacePoint::random(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn naive_product(x: &GroupElement, y: &GroupElement) -> [f64; 4] {
    [
        x.a * y.a + x.b * y.c,
        x.a * y.b + x.b * y.d,
        x.c * y.a + x.d * y.c,
        x.c * y.b + x.d * y.d,
    ]
}

#[test]
fn octagon_generators() {
    let g = surface_group();
    assert_eq!(g.generators().len(), 8);
    let s2 = 2f64.sqrt();
    let g0 = g.generator(0);
    let want = GroupElement::new(1.0 + s2, (2.0 + 2.0 * s2).sqrt(), (2.0 + 2.0 * s2).sqrt(), 1.0 + s2);
    assert!(g0.approx_eq(&want, 1e-12));
    for k in 0..8 {
        let h = g.generator(k);
        assert!(h.trace().abs() > 2.0);
        assert!((h.det() - 1.0).abs() < 1e-12);
        let inv = g.generator(g.inverse_index(k));
        assert!((h * inv).approx_eq(&GroupElement::IDENTITY, 1e-12));
    }
    assert!(g.verify_relation(1e-10));
}

#[test]
fn compose_identity_inverse_and_oracle() {
    let g0 = surface_group().generator(0);
    assert!((GroupElement::IDENTITY * g0).approx_eq(&g0, 1e-15));
    assert!((g0 * g0.inverse()).approx_eq(&GroupElement::IDENTITY, 1e-12));
    let x = GroupElement::new(2.0, 3.0, 1.0, 2.0);
    let y = GroupElement::new(0.5, -1.0, 0.25, 1.5);
    let p = x * y;
    let want = naive_product(&x, &y);
    let s = if p.a * want[0] >= 0.0 { 1.0 } else { -1.0 };
    for (got, w) in [p.a, p.b, p.c, p.d].iter().zip(want) {
        assert!((got - s * w).abs() < 1e-12, "{got} vs {w}");
    }
}

#[test]
fn non_unimodular_input_is_rejected() {
    assert!(matches!(GroupElement::try_new(1.0, 2.0, 3.0, 4.0), Err(Error::InvalidElement(_))));
}

#[test]
fn determinant_survives_long_words() {
    let g = surface_group();
    let w: Vec<usize> = (0..40).map(|i| (3 * i + 1) % 8).collect();
    let h = g.word(&w);
    assert!(h.is_finite());
    assert!((h.det() - 1.0).abs() < 1e-9);
}

#[test]
fn geodesic_step_identity_and_group_law() {
    for seed in 0..20 {
        let p = point(seed);
        assert!(p.flow(0.0).unwrap().distance(&p) < 1e-14);
        let s = -5.0 + 0.5 * seed as f64;
        let t = 5.0 - 0.37 * seed as f64;
        let a = p.flow(s).unwrap().flow(t).unwrap();
        let b = p.flow(s + t).unwrap();
        assert!(a.distance(&b) < 1e-10, "seed {seed}: {}", a.distance(&b));
    }
}

#[test]
fn geodesic_step_moves_at_most_t() {
    for seed in 0..100 {
        let p = point(seed);
        let t = -3.0 + 0.06 * seed as f64;
        assert!(p.flow(t).unwrap().distance(&p) <= t.abs() + 1e-9);
    }
}

#[test]
fn horocycle_conjugation_and_contraction() {
    for seed in 0..20 {
        let p = point(seed);
        assert!(p.horocycle(0.0, HorocycleKind::Unstable).unwrap().distance(&p) < 1e-14);
        let (r, t) = (0.3, 1.7);
        let a = p.horocycle(r, HorocycleKind::Unstable).unwrap().flow(t).unwrap();
        let b = p.flow(t).unwrap().horocycle(r * t.exp(), HorocycleKind::Unstable).unwrap();
        assert!(a.distance(&b) < 1e-9);
    }
    let p = point(3);
    let q = p.horocycle(0.1, HorocycleKind::Stable).unwrap();
    for t in 1..=10 {
        let t = t as f64;
        let d = p.flow(t).unwrap().distance(&q.flow(t).unwrap());
        assert!(d < 0.1 * (-t).exp() * 1.01, "T = {t}: {d}");
    }
}

#[test]
fn reduction_of_reduced_point_is_trivial() {
    let g = surface_group();
    for seed in 0..50 {
        let p = point(seed);
        let (r, deck) = g.reduce(p.rep()).unwrap();
        assert!(r.approx_eq(p.rep(), 1e-15));
        assert!(deck.approx_eq(&GroupElement::IDENTITY, 0.0));
    }
}

#[test]
fn distance_properties() {
    for seed in 0..50 {
        let p = point(seed);
        let q = point(seed + 1000);
        assert_eq!(p.distance(&p), 0.0);
        assert!((p.distance(&q) - q.distance(&p)).abs() < 1e-12);
    }
}

#[test]
fn closed_orbit_length_matches_eigenvalue() {
    let c = ClosedOrbit::from_word(&[0]).unwrap();
    let tr = c.element().trace().abs();
    let lam = 0.5 * (tr + (tr * tr - 4.0).sqrt());
    assert!((c.length() - 2.0 * lam.ln()).abs() < 1e-12);
    let back = c.base_point().flow(c.length()).unwrap();
    assert!(back.distance(&c.base_point()) < 1e-9);
}

#[test]
fn conjugate_words_have_equal_length() {
    let a = ClosedOrbit::from_word(&[1, 3]).unwrap();
    let g = surface_group();
    let b = ClosedOrbit::from_word(&[2, 1, 3, g.inverse_index(2)]).unwrap();
    assert!((a.length() - b.length()).abs() < 1e-12);
}

#[test]
fn empty_word_is_not_hyperbolic() {
    assert!(matches!(ClosedOrbit::from_word(&[]), Err(Error::NotHyperbolic(_))));
}

#[test]
fn approximating_orbits_close_in() {
    let c = ClosedOrbit::from_word(&[1, 3]).unwrap();
    let mut prev = f64::INFINITY;
    for k in [1, 2, 4, 8] {
        let e = c.approximating(k, &[1, 2]).unwrap();
        assert!(e.length() > 0.0);
        assert!(e.element().is_finite());
        let rel = (e.element().translation_length() - e.length()).abs() / e.length();
        assert!(rel < 1e-6, "k = {k}: {rel}");
        if k >= 2 {
            let d = c.hausdorff_to(&e, 200).unwrap();
            assert!(d <= prev + 1e-12, "k = {k}: {d} > {prev}");
            prev = d;
        }
    }
}

#[test]
fn flow_derivative_is_diagonal() {
    // displacing along E^u by h before flowing for t equals displacing by
    // h e^t after flowing
    let p = point(5);
    let (h, t) = (1e-4, 0.8);
    for (kind, rate) in [(HorocycleKind::Unstable, t), (HorocycleKind::Stable, -t)] {
        let a = p.horocycle(h, kind).unwrap().flow(t).unwrap();
        let base = p.flow(t).unwrap();
        let d = base.body_delta(&a);
        let idx = if kind == HorocycleKind::Unstable { 0 } else { 1 };
        let want = h * f64::exp(rate);
        assert!((d[idx] - want).abs() / want < 1e-6, "{kind:?}: {} vs {want}", d[idx]);
    }
}

// Longer words push the entries of gamma beyond what double precision can
// reduce back to the domain.
fn word_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..8, 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_is_deck_invariant(seed in 0u64..1_000_000, word in word_strategy()) {
        let g = surface_group();
        let p = point(seed);
        let gamma = g.word(&word);
        let y = SurfacePoint::from_lift(&(gamma * *p.rep())).unwrap();
        // rounding of the product grows with the size of gamma
        let scale = [gamma.a, gamma.b, gamma.c, gamma.d].iter().map(|x| x * x).sum::<f64>();
        prop_assert!(y.distance(&p) <= 1e-13 * scale.max(1.0) + 1e-12);
        prop_assert!(g.is_reduced(y.rep()));
        let again = SurfacePoint::from_lift(y.rep()).unwrap();
        prop_assert_eq!(again, y);
    }

    #[test]
    fn stepwise_reduction_along_long_words(seed in 0u64..1_000_000, word in prop::collection::vec(0usize..8, 1..=20)) {
        let g = surface_group();
        let p = point(seed);
        let mut y = p;
        for &k in &word {
            y = SurfacePoint::from_lift(&(g.generator(k) * *y.rep())).unwrap();
            prop_assert!(g.is_reduced(y.rep()));
        }
        prop_assert!(y.distance(&p) < 1e-9);
        prop_assert_eq!(SurfacePoint::from_lift(y.rep()).unwrap(), y);
    }

    #[test]
    fn commutation_identities(t in -4.0f64..4.0, r in -3.0f64..3.0) {
        let a = GroupElement::flow(-t) * GroupElement::upper(r) * GroupElement::flow(t);
        prop_assert!(a.approx_eq(&GroupElement::upper(r * (-t).exp()), 1e-12 * (1.0 + r.abs() * (-t).exp())));
        let b = GroupElement::flow(-t) * GroupElement::lower(r) * GroupElement::flow(t);
        prop_assert!(b.approx_eq(&GroupElement::lower(r * t.exp()), 1e-12 * (1.0 + r.abs() * t.exp())));
    }

    #[test]
    fn products_stay_unimodular(i in 0usize..8, j in 0usize..8, t in -3.0f64..3.0) {
        let g = surface_group();
        let h = g.generator(i) * GroupElement::flow(t) * g.generator(j);
        prop_assert!((h.det() - 1.0).abs() < 1e-12);
    }
}
