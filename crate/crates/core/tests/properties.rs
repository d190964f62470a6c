//! Randomised invariants across modules.

use std::f64::consts::PI;

use fock_phase::fock::{dist_alpha, FockPoly};
use fock_phase::gabor::{hardy_check, HermiteSignal};
use fock_phase::lattice::Lattice;
use fock_phase::phaseless::lifted_injectivity;
use fock_phase::pointset::{certify_f_closeness, median_angle, verify_f_closeness};
use fock_phase::sampler::{mc_angle_bound, random_triple, GeneratorConfig};
use fock_phase::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex(range: f64) -> impl Strategy<Value = Complex64> {
    (-range..range, -range..range).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Positively oriented basis with moderate aspect ratio.
fn lattice() -> impl Strategy<Value = Lattice> {
    (0.3..2.0f64, 0.0..std::f64::consts::TAU, 0.3..3.0f64, 0.2..(PI - 0.2)).prop_map(|(r1, a1, r2, gap)| {
        Lattice::new(Complex64::from_polar(r1, a1), Complex64::from_polar(r2, a1 + gap)).unwrap()
    })
}

fn triple_set(v: f64, cap: f64, radius: f64, seed: u64) -> fock_phase::pointset::IndexedPointSet {
    let cfg = GeneratorConfig::new(Lattice::square(v).unwrap(), 7.0, cap, radius, seed, PI).unwrap();
    random_triple(&cfg).unwrap().samples
}

proptest! {
    #[test]
    fn area_scales_with_modulus_squared(l in lattice(), c in complex(3.0)) {
        prop_assume!(c.norm() > 0.05);
        let scaled = l.scaled(c).unwrap();
        prop_assert!((scaled.area() - c.norm_sqr() * l.area()).abs() <= 1e-10 * scaled.area());
    }

    #[test]
    fn liouville_implies_uniqueness(l in lattice(), alpha in 0.1..20.0f64) {
        prop_assert!(!l.is_liouville(alpha) || l.is_uniqueness(alpha));
    }

    #[test]
    fn reflection_class_depends_on_the_set_only(l in lattice(), a in 0.3..2.0f64, b in 0.3..2.0f64) {
        let rect = Lattice::new(Complex64::new(a, 0.0), Complex64::new(0.0, b)).unwrap();
        let rhombic = Lattice::from_generators(Complex64::new(a, b), Complex64::new(a, -b)).unwrap();
        for lat in [l, rect, rhombic] {
            let swapped = Lattice::from_generators(-lat.omega2(), -lat.omega1()).unwrap();
            prop_assert_eq!(lat.in_class_l().unwrap(), swapped.in_class_l().unwrap());
        }
        prop_assert!(rect.in_class_l().unwrap());
        prop_assert!(rhombic.in_class_l().unwrap());
    }

    #[test]
    fn median_angle_is_at_most_a_right_angle(a in complex(2.0), b in complex(2.0), c in complex(2.0)) {
        let phi = median_angle(a, b, c);
        prop_assert!((0.0..=PI / 2.0).contains(&phi));
    }

    #[test]
    fn dist_is_a_metric(alpha in 0.2..5.0f64, z in complex(2.0), w in complex(2.0), u in complex(2.0)) {
        let (zw, wu, zu) = (dist_alpha(alpha, z, w), dist_alpha(alpha, w, u), dist_alpha(alpha, z, u));
        prop_assert!(dist_alpha(alpha, z, z) <= 1e-12);
        prop_assert!((zw - dist_alpha(alpha, w, z)).abs() <= 1e-12);
        prop_assert!(zu <= zw + wu + 1e-12);
    }

    #[test]
    fn translate_matches_shifted_evaluation(seed in any::<u64>(), s in complex(1.0), z in complex(1.0)) {
        let f = FockPoly::random_unit(PI, 6, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let g = f.translate(s, PI).unwrap();
        let (lhs, rhs) = (g.eval(z), f.eval(z + s));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn gaussian_passes_hardy_on_dense_lattices(l in lattice(), shrink in 0.2..0.95f64) {
        let lat = l.scaled(Complex64::new((shrink / l.area()).sqrt(), 0.0)).unwrap();
        prop_assert!(lat.area() < 1.0);
        let verdict = hardy_check(&HermiteSignal::gaussian(), &lat, 0.71, 3.0).unwrap();
        prop_assert!(verdict.passed, "{:?}", verdict);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_offsets_respect_the_cap(seed in any::<u64>(), cap in 0.05..1.0f64) {
        let set = triple_set(0.45, cap, 3.0, seed);
        let report = certify_f_closeness(&set, 7.0, None).unwrap();
        prop_assert!(report.kappa <= cap * (1.0 + 1e-12));
    }

    #[test]
    fn certified_closeness_is_least(seed in any::<u64>()) {
        let set = triple_set(0.45, 1.0, 3.0, seed);
        let kappa = certify_f_closeness(&set, 7.0, None).unwrap().kappa;
        prop_assert!(verify_f_closeness(&set, 7.0, kappa * (1.0 + 1e-12), None).is_ok());
        prop_assert!(verify_f_closeness(&set, 7.0, kappa * (1.0 - 1e-6), None).is_err());
    }

    #[test]
    fn larger_windows_extend_smaller_ones(seed in any::<u64>()) {
        let small = triple_set(0.45, 1.0, 2.0, seed);
        let large = triple_set(0.45, 1.0, 4.0, seed);
        prop_assert!(large.len() > small.len());
        for (idx, tag, u) in small.entries() {
            prop_assert_eq!(large.scaled_offset(idx, tag), Some(u));
        }
    }

    #[test]
    fn mc_stderr_is_binomial(seed in any::<u64>(), trials in 10_000u64..20_000) {
        let r = mc_angle_bound(trials, 0.1, seed).unwrap();
        prop_assert_eq!(r.p_hat, r.hits as f64 / trials as f64);
        let expected = (r.p_hat * (1.0 - r.p_hat) / trials as f64).sqrt();
        prop_assert!((r.stderr - expected).abs() <= 1e-15);
    }

    #[test]
    fn kernel_shrinks_as_points_are_added(seed in any::<u64>()) {
        let mut pts: Vec<Complex64> = triple_set(0.45, 1.0, 1.6, seed).positions();
        pts.sort_by(|a, b| fock_phase::lattice::polar_order(*a, *b));
        let mut previous = usize::MAX;
        for m in [5, 10, 16, 24] {
            let kernel = lifted_injectivity(&pts[..m.min(pts.len())], 3, PI).unwrap().kernel_dim;
            prop_assert!(kernel <= previous);
            previous = kernel;
        }
    }
}
