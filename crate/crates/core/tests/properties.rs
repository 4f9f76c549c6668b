use leafdim::covers::{minimal_bowen_cover, n_orbit_thinner, thinner_than};
use leafdim::hdim::outer_measure_approx;
use leafdim::leaf::{iterate_segment, torus_distance, trace_subset, LeafPart};
use leafdim::{AmbientSet, GridCover, LeafSegment, LeafSubset, PartiallyHyperbolic, TorusPoint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn systems() -> Vec<PartiallyHyperbolic> {
    let f = PartiallyHyperbolic::paper3(5).unwrap();
    vec![PartiallyHyperbolic::cat2(), f.inverse().unwrap(), f]
}

fn point(dim: usize, seed: u64) -> TorusPoint {
    TorusPoint::random(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn segment(system: &PartiallyHyperbolic, seed: u64, lo: f64, len: f64) -> LeafSegment {
    LeafSegment::on_leaf(system, point(system.dim(), seed), lo, lo + len).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_is_exactly_invertible(which in 0usize..3, seed: u64, k in -40i64..40) {
        let f = &systems()[which];
        let x = point(f.dim(), seed);
        prop_assert_eq!(f.apply(&f.apply(&x, k), -k), x);
    }

    #[test]
    fn iterated_length_grows_by_the_unstable_rate(which in 0usize..3, seed: u64, len in 1e-6f64..0.3) {
        let f = &systems()[which];
        let s = segment(f, seed, -len / 2.0, len);
        for n in 0..=60u32 {
            let t = iterate_segment(f, &s, n);
            let expected = s.log_length() + n as f64 * f.log_unstable_rate();
            prop_assert!((t.log_length() - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn endpoint_images_agree_both_ways(which in 0usize..3, seed: u64, t in -0.2f64..0.2, n in 0u32..9) {
        let f = &systems()[which];
        let s = segment(f, seed, -0.2, 0.4);
        // iterate the base, then move along the leaf
        let a = iterate_segment(f, &s, n).point_at(t);
        // move along the leaf, then apply the matrix to the lifted point
        let mut b = s.point_at(t);
        for _ in 0..n * f.power_exponent() {
            b = f.map().mul_vec(&b);
        }
        let wrap = |v: Vec<f64>| v.into_iter().map(|c| c.rem_euclid(1.0)).collect::<Vec<_>>();
        prop_assert!(torus_distance(&wrap(a), &wrap(b)) <= 1e-9);
    }

    #[test]
    fn sub_segments_are_at_least_as_thin(which in 0usize..3, seed: u64, len in 1e-5f64..0.2, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = &systems()[which];
        let cover = GridCover::with_mesh(16, f.dim()).unwrap();
        let s = segment(f, seed, 0.0, len);
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        let inner = s.sub(x * len, y * len);
        let outer_n = n_orbit_thinner(f, &s, &cover, 60).n;
        let inner_n = n_orbit_thinner(f, &inner, &cover, 60).n;
        prop_assert!(inner_n >= outer_n);
        prop_assert_eq!(outer_n > 0, thinner_than(&s, &cover));
    }

    #[test]
    fn shift_identity(which in 0usize..3, seed: u64, len in 1e-7f64..0.05) {
        let f = &systems()[which];
        let cover = GridCover::with_mesh(16, f.dim()).unwrap();
        let s = segment(f, seed, -len / 2.0, len);
        let n = n_orbit_thinner(f, &s, &cover, 60);
        prop_assume!(n.n >= 1 && !n.capped);
        let shifted = n_orbit_thinner(f, &iterate_segment(f, &s, 1), &cover, 60);
        prop_assert_eq!(shifted.n, n.n - 1);
    }

    #[test]
    fn cover_count_is_bounded(which in 0usize..3, seed: u64, len in 1e-3f64..0.2, n in 1u32..8, mesh in prop::sample::select(vec![4u32, 8, 16])) {
        let f = &systems()[which];
        let cover = GridCover::with_mesh(mesh, f.dim()).unwrap();
        let s = segment(f, seed, 0.0, len);
        let count = minimal_bowen_cover(f, &LeafSubset::from_segment(s), &cover, n).unwrap().count;
        let lu = f.unstable_rate().powi(f.power_exponent() as i32);
        let bound = (len * lu.powi(n as i32) * mesh as f64 / cover.inflation()).ceil() + 1.0;
        prop_assert!(count as f64 <= bound, "count {} bound {}", count, bound);
    }

    #[test]
    fn torus_trace_keeps_the_whole_segment(which in 0usize..3, seed: u64, len in 1e-4f64..0.5) {
        let f = &systems()[which];
        let s = segment(f, seed, -len / 2.0, len);
        let k = trace_subset(f, &AmbientSet::Torus, &s, 1e-3).unwrap();
        prop_assert_eq!(k.measure(), s.length());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn outer_measure_is_subadditive(
        which in 0usize..3,
        seed: u64,
        same_leaf: bool,
        a in -0.1f64..0.1, la in 1e-3f64..0.1,
        b in -0.1f64..0.1, lb in 1e-3f64..0.1,
        frac in 0.0f64..1.0,
        scale in 1u32..6,
    ) {
        let f = &systems()[which];
        let cover = GridCover::with_mesh(8, f.dim()).unwrap();
        let carrier = segment(f, seed, -0.2, 0.4);
        let x1 = LeafSubset { parts: vec![LeafPart::new(carrier.clone(), vec![leafdim::leaf::Interval::new(a, a + la)])], resolution: None };
        let other = if same_leaf { carrier } else { segment(f, seed ^ 0x9e37, -0.2, 0.4) };
        let x2 = LeafSubset { parts: vec![LeafPart::new(other, vec![leafdim::leaf::Interval::new(b, b + lb)])], resolution: None };
        let lambda = frac * 1.5 * f.log_unstable_rate();
        let m = |x: &LeafSubset| outer_measure_approx(f, x, &cover, lambda, scale, 3).unwrap().0;
        let (m1, m2, mu) = (m(&x1), m(&x2), m(&x1.union(&x2)));
        prop_assert!(mu <= m1 + m2 + 1e-9, "{} > {} + {}", mu, m1, m2);
    }
}
