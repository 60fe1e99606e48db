mod common;

use lyapprox::base::{BaseSystem, Point};
use lyapprox::base::intmat::IntMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn torus_point() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.0f64, 0.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_law((a0, a1) in torus_point(), a in -20i64..=20, b in -20i64..=20) {
        let sys = BaseSystem::cat_map();
        let x = sys.point(&[a0, a1]);
        let lhs = sys.step(&sys.step(&x, a), b);
        let rhs = sys.step(&x, a + b);
        prop_assert!(sys.dist(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn shift_group_law(word in proptest::collection::vec(0u8..3, 1..12), a in -20i64..=20, b in -20i64..=20) {
        let sys = BaseSystem::full_shift(3).unwrap();
        let x = Point::Shift(lyapprox::base::shift::ShiftPoint::periodic(3, word));
        let lhs = sys.step(&sys.step(&x, a), b);
        prop_assert_eq!(sys.dist(&lhs, &sys.step(&x, a + b)), 0.0);
    }

    #[test]
    fn metric_axioms(p in torus_point(), q in torus_point(), r in torus_point()) {
        let sys = BaseSystem::cat_map();
        let (x, y, z) = (sys.point(&[p.0, p.1]), sys.point(&[q.0, q.1]), sys.point(&[r.0, r.1]));
        prop_assert_eq!(sys.dist(&x, &x), 0.0);
        prop_assert!((sys.dist(&x, &y) - sys.dist(&y, &x)).abs() <= 1e-12);
        prop_assert!(sys.dist(&x, &z) <= sys.dist(&x, &y) + sys.dist(&y, &z) + 1e-12);
    }

    #[test]
    fn closing_is_exact((a0, a1) in torus_point(), k in 1u64..40) {
        let sys = BaseSystem::cat_map();
        let rep = sys.close_orbit(&sys.point(&[a0, a1]), k).unwrap();
        let back = sys.step(&rep.p, k as i64);
        prop_assert!(back.as_torus().unwrap().exact_eq(rep.p.as_torus().unwrap()));
        prop_assert!(sys.dist(&back, &rep.p) <= 1e-10);
        prop_assert_eq!(rep.distances.len() as u64, k + 1);
    }
}

#[test]
fn enumerated_points_are_periodic_and_counted() {
    for rows in [vec![vec![2, 1], vec![1, 1]], vec![vec![3, 1], vec![2, 1]]] {
        let sys = BaseSystem::toral(&rows).unwrap();
        let m = IntMatrix::from_rows(&rows);
        for k in 1..=8u64 {
            let pts = sys.enumerate_periodic(k).unwrap();
            let det = m.pow(k).sub_identity().det();
            assert_eq!(pts.len().to_string(), det.magnitude().to_string(), "k = {k}");
            for p in &pts {
                assert!(sys.dist(&sys.step(p, k as i64), p) <= 1e-10);
            }
        }
    }
}

#[test]
fn three_torus_counts() {
    let rows = vec![vec![2, 1, 0], vec![1, 1, 1], vec![0, 1, 1]];
    let Ok(sys) = BaseSystem::toral(&rows) else { return };
    let m = IntMatrix::from_rows(&rows);
    for k in 1..=4u64 {
        let det = m.pow(k).sub_identity().det();
        assert_eq!(sys.periodic_count(k).unwrap().to_string(), det.magnitude().to_string());
    }
}

#[test]
fn shadowing_decay_on_recurrences() {
    let sys = BaseSystem::cat_map();
    let threshold = 0.9 * sys.gamma_hyp();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let k = rng.gen_range(10..=30);
        let (x, p) = common::recurrence_instance(&sys, &mut rng, k, 1e-3);
        assert!(sys.dist(&x, &sys.step(&x, k as i64)) < 1e-3);
        let rep = sys.close_orbit(&x, k).unwrap();
        assert!(rep.p.as_torus().unwrap().exact_eq(p.as_torus().unwrap()));
        assert!(rep.fitted_gamma >= threshold, "k = {k}: {}", rep.fitted_gamma);
    }
}
