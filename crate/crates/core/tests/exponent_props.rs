mod common;

use common::{brute_force_good_times, families};
use lyapprox::base::BaseSystem;
use lyapprox::cocycle::CocycleSpec;
use lyapprox::exponents::{good_times, norm_exponents, periodic_exponents, qr_spectrum, subadditive_trace};
use proptest::prelude::*;

#[test]
fn sum_rule_and_ordering() {
    let sys = BaseSystem::cat_map();
    let x = sys.point(&[0.41, 0.13]);
    for (name, c) in families(&sys) {
        let s = qr_spectrum(&c, &sys, &x, 10_000, 2, 5).unwrap();
        let sum: f64 = s.exponents.iter().sum();
        assert!((sum - s.log_det_average).abs() < 1e-6, "{name}: {sum} vs {}", s.log_det_average);
        assert!(s.exponents.windows(2).all(|w| w[0] <= w[1]), "{name}");
        assert_eq!((s.lambda_minus, s.lambda_plus), (s.exponents[0], *s.exponents.last().unwrap()));
        let (plus, minus) = norm_exponents(&c, &sys, &x, 2000).unwrap();
        assert!(minus <= plus + 1e-12, "{name}");
    }
}

#[test]
fn inverse_norm_rates() {
    let sys = BaseSystem::cat_map();
    let x = sys.point(&[0.41, 0.13]);
    let (_, m) = norm_exponents(&CocycleSpec::diagonal(&[2.0, 0.5]).unwrap(), &sys, &x, 50).unwrap();
    assert!((m + 2f64.ln()).abs() < 1e-12);
    let (p, m) = norm_exponents(&CocycleSpec::identity(3), &sys, &x, 50).unwrap();
    assert_eq!((p, m), (0.0, 0.0));
    let rot = CocycleSpec::diag_rotation(vec![0.7, -0.7], vec![1.0, 0.0], 0.0).unwrap();
    let (_, m) = norm_exponents(&rot, &sys, &x, 1).unwrap();
    assert!((m + 0.7).abs() < 1e-6, "{m}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn periodic_radius_below_norm(a0 in 0.0..1.0f64, a1 in 0.0..1.0f64, k in 1u64..=25, fam in 0usize..8) {
        let sys = BaseSystem::cat_map();
        let (name, c) = families(&sys).swap_remove(fam);
        let p = sys.close_orbit(&sys.point(&[a0, a1]), k).unwrap().p;
        let pe = periodic_exponents(&c, &sys, &p, k).unwrap();
        prop_assert!(pe.spectral_radius() <= pe.norm_plus + 1e-12, "{}", name);
        prop_assert!(pe.spectrum[0] >= pe.norm_minus - 1e-12, "{}", name);
        prop_assert!(pe.spectrum.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn good_times_match_double_loop(a0 in 0.0..1.0f64, a1 in 0.0..1.0f64, n_max in 50usize..=500,
                                    l in 1usize..40, eps in 0.01..0.3f64, fam in 0usize..8) {
        let sys = BaseSystem::cat_map();
        let (name, c) = families(&sys).swap_remove(fam);
        let x = sys.point(&[a0, a1]);
        let tr = subadditive_trace(&c, &sys, &x, n_max).unwrap();
        let lambdas = [tr.nu_a, tr.nu_a_tilde];
        let (a, b) = (tr.norm_series(), tr.inverse_series());
        let gt = good_times(&[&a, &b], &lambdas, eps, l).unwrap();
        let brute = brute_force_good_times(&c, &sys, &x, n_max, lambdas, eps, l);
        prop_assert_eq!(&gt.members, &brute, "{}", name);
        prop_assert_eq!(gt.with_l(l), brute);
    }
}

#[test]
fn constant_trace_good_times_are_everything() {
    let sys = BaseSystem::cat_map();
    let c = CocycleSpec::diagonal(&[2.0, 0.5]).unwrap();
    let x = sys.point(&[0.2, 0.7]);
    let tr = subadditive_trace(&c, &sys, &x, 1000).unwrap();
    let (a, b) = (tr.norm_series(), tr.inverse_series());
    let l2 = 2f64.ln();
    let gt = good_times(&[&a, &b], &[l2, l2], 0.05, 20).unwrap();
    assert_eq!(gt.members, (20..=1000).collect::<Vec<_>>());
    assert_eq!(gt.min_l, Some(1));
}
