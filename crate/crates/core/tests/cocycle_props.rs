mod common;

use common::{families, rel_diff};
use lyapprox::base::BaseSystem;
use lyapprox::cocycle::CocycleSpec;
use lyapprox::exponents::{subadditive_trace, Subadditive};
use lyapprox::linalg::{compound, op_norm, singular_values_desc};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0..2.0f64, d * d).prop_map(move |v| DMatrix::from_row_slice(d, d, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cocycle_equation(a0 in 0.0..1.0f64, a1 in 0.0..1.0f64, n in 0i64..=20, k in 0i64..=20, fam in 0usize..8) {
        let sys = BaseSystem::cat_map();
        let (name, c) = families(&sys).swap_remove(fam);
        let x = sys.point(&[a0, a1]);
        let whole = c.product(&sys, &x, n + k).unwrap();
        let split = c.product(&sys, &sys.step(&x, k), n).unwrap() * c.product(&sys, &x, k).unwrap();
        prop_assert!(rel_diff(&whole, &split) < 1e-8, "{}", name);
    }

    #[test]
    fn inverse_identity(a0 in 0.0..1.0f64, a1 in 0.0..1.0f64, n in 1i64..=20, fam in 0usize..8) {
        let sys = BaseSystem::cat_map();
        let (name, c) = families(&sys).swap_remove(fam);
        let x = sys.point(&[a0, a1]);
        let back = c.product(&sys, &x, -n).unwrap();
        let fwd = c.product(&sys, &sys.step(&x, -n), n).unwrap();
        let id = DMatrix::<f64>::identity(c.dim, c.dim);
        // Relative to ‖A^{-n}‖‖A^n‖, the scale of the rounding in the product.
        let scale = op_norm(&back) * op_norm(&fwd);
        prop_assert!(op_norm(&(&back * &fwd - &id)) < 1e-9 * scale, "{}", name);
    }

    #[test]
    fn compound_multiplicativity(a in matrix(4), b in matrix(4), i in 1usize..=4) {
        let lhs = compound(&(&a * &b), i);
        let rhs = compound(&a, i) * compound(&b, i);
        prop_assert!(op_norm(&(&lhs - &rhs)) <= 1e-9 * (1.0 + op_norm(&lhs)));
    }

    #[test]
    fn compound_norm_is_top_singular_product(a in matrix(4), i in 1usize..=4) {
        let s = singular_values_desc(&a);
        let top: f64 = s[..i].iter().product();
        prop_assert!((op_norm(&compound(&a, i)) - top).abs() <= 1e-9 * (1.0 + top));
    }

    #[test]
    fn exterior_cocycle_is_compound(a0 in 0.0..1.0f64, a1 in 0.0..1.0f64, n in 1i64..=10) {
        let sys = BaseSystem::cat_map();
        let c = CocycleSpec::diag_rotation(vec![0.5, 0.1, -0.3], vec![1.0, 2.0], 0.3).unwrap();
        let x = sys.point(&[a0, a1]);
        let ext = c.exterior_power(2).unwrap().product(&sys, &x, n).unwrap();
        let direct = compound(&c.product(&sys, &x, n).unwrap(), 2);
        prop_assert!(rel_diff(&ext, &direct) < 1e-9);
    }

    #[test]
    fn shift_base_cocycle_equation(word in proptest::collection::vec(0u8..2, 1..10), n in 0i64..=15, k in 0i64..=15) {
        let sys = BaseSystem::full_shift(2).unwrap();
        let c = CocycleSpec::diag_rotation(vec![0.4, -0.2], vec![1.0, 1.0], 0.1).unwrap();
        let x = lyapprox::base::Point::Shift(lyapprox::base::shift::ShiftPoint::periodic(2, word));
        let whole = c.product(&sys, &x, n + k).unwrap();
        let split = c.product(&sys, &sys.step(&x, k), n).unwrap() * c.product(&sys, &x, k).unwrap();
        prop_assert!(rel_diff(&whole, &split) < 1e-8);
    }
}

#[test]
fn subadditivity_on_every_split() {
    let sys = BaseSystem::cat_map();
    let x = sys.point(&[0.318, 0.577]);
    for (name, c) in families(&sys) {
        let tr = subadditive_trace(&c, &sys, &x, 2000).unwrap();
        for s in [tr.norm_series(), tr.inverse_series()] {
            assert_eq!(s.value(0), 0.0);
            let total = s.horizon();
            // a_N(x) ≤ a_k(x) + a_{N-k}(f^k x) for every k.
            let tails = s.tails(total);
            for k in 0..=total {
                assert!(s.value(total) <= s.value(k) + tails[k] + 1e-9, "{name}, k = {k}");
            }
        }
    }
}
