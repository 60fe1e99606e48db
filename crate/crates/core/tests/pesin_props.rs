mod common;

use lyapprox::base::BaseSystem;
use lyapprox::cocycle::CocycleSpec;
use lyapprox::exponents::qr_spectrum;
use lyapprox::linalg::op_norm;
use lyapprox::pesin::{
    lyapunov_gram, lyapunov_norm_pm, lyapunov_operator_norm, metrics_along, ConeSpec, LyapunovMetricData,
    SplittingField,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// `[[2, 1], [0, 2]] ⊕ [1/2]`: a two-dimensional top block on which the
/// cocycle is not conformal.
fn jordan() -> (CocycleSpec, SplittingField) {
    let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.5]);
    let e3 = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
    let e12 = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let field = SplittingField::Fixed(vec![((0.5f64).ln(), e3), (2f64.ln(), e12)]);
    (CocycleSpec::constant(m).unwrap(), field)
}

/// Cat-map derivative with its exact eigenline splitting.
fn derivative(sys: &BaseSystem) -> (CocycleSpec, SplittingField) {
    let c = CocycleSpec::derivative(sys).unwrap();
    let x = sys.point(&[0.3, 0.3]);
    let s = qr_spectrum(&c, sys, &x, 2000, 1, 0).unwrap();
    let field = SplittingField::for_cocycle(&c, sys, &x, &s, 200).unwrap();
    (c, field)
}

fn vector(d: usize) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-1.0..1.0f64, d).prop_map(DVector::from_vec)
}

fn metric(c: &CocycleSpec, f: &SplittingField, sys: &BaseSystem, p: (f64, f64), eps: f64) -> LyapunovMetricData {
    lyapunov_gram(c, sys, &sys.point(&[p.0, p.1]), eps, f, (40.0 / eps).ceil() as usize).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lower_bound_law(u in vector(3), v in vector(2), a in 0.0..1.0f64, b in 0.0..1.0f64, eps in 0.05..0.5f64) {
        let sys = BaseSystem::cat_map();
        let (c, f) = jordan();
        let m = metric(&c, &f, &sys, (a, b), eps);
        prop_assert!(m.norm(&u) >= u.norm() - m.truncation_tail - 1e-12);
        prop_assert!(m.k_eps >= 1.0 - 1e-12);
        prop_assert!(m.min_eigenvalue() >= 1.0 - 1e-12);
        let (dc, df) = derivative(&sys);
        let m = metric(&dc, &df, &sys, (a, b), eps);
        prop_assert!(m.norm(&v) >= v.norm() - m.truncation_tail - 1e-12);
        let r = (2f64.sqrt() + 1.0).ln();
        let (pm, tail) = lyapunov_norm_pm(&dc, &sys, &sys.point(&[a, b]), &v, eps.max(0.1), 2.0 * r, -2.0 * r, 800).unwrap();
        prop_assert!(pm >= v.norm() - tail - 1e-12);
    }

    #[test]
    fn gram_matches_direct_series(s in -1.0..1.0f64, t in -1.0..1.0f64, eps in 0.1..0.6f64) {
        prop_assume!(s.abs() + t.abs() > 1e-3);
        let sys = BaseSystem::cat_map();
        let (c, f) = jordan();
        let x = sys.point(&[0.1, 0.2]);
        let n_trunc = (40.0 / eps).ceil() as usize;
        let m = lyapunov_gram(&c, &sys, &x, eps, &f, n_trunc).unwrap();
        // u in the two-dimensional block with exponent ln 2.
        let u = DVector::from_vec(vec![s, t, 0.0]);
        let lam = 2f64.ln();
        let mut sum = 0.0;
        for n in -(n_trunc as i64)..=n_trunc as i64 {
            let an = c.product(&sys, &x, n).unwrap();
            let w = (an * &u).norm() * (-lam * n as f64).exp();
            sum += w * w * (-eps * n.unsigned_abs() as f64).exp();
        }
        let direct = (3.0 * sum).sqrt();
        prop_assert!((m.norm(&u) - direct).abs() <= 1e-9 * direct, "{} vs {}", m.norm(&u), direct);
    }

    #[test]
    fn operator_norm_sandwich(a in vector(9), p in (0.0..1.0f64, 0.0..1.0f64), q in (0.0..1.0f64, 0.0..1.0f64), eps in 0.05..0.5f64) {
        let sys = BaseSystem::cat_map();
        let (c, f) = jordan();
        let a = DMatrix::from_column_slice(3, 3, a.as_slice());
        prop_assume!(op_norm(&a) > 1e-6);
        let (mx, my) = (metric(&c, &f, &sys, p, eps), metric(&c, &f, &sys, q, eps));
        let op = lyapunov_operator_norm(&my, &a, &mx);
        let plain = op_norm(&a);
        prop_assert!(plain / mx.k_eps <= op * (1.0 + 1e-9));
        prop_assert!(op <= my.k_eps * plain * (1.0 + 1e-9));
    }

    #[test]
    fn cone_nesting(u in vector(3), eps in 0.02..0.15f64) {
        let sys = BaseSystem::cat_map();
        let (c, f) = jordan();
        let m = metric(&c, &f, &sys, (0.4, 0.9), eps);
        let cones = ConeSpec::from_exponents(2f64.ln(), 0.5f64.ln(), eps).unwrap();
        prop_assert!(cones.theta < 1.0);
        if cones.contains(&m, &u, true) {
            prop_assert!(cones.contains(&m, &u, false));
        }
        // The top block itself lies in every cone.
        let top = DVector::from_vec(vec![u[0], u[1], 0.0]);
        prop_assert!(m.cone_ratio(&top) == 0.0 && cones.contains(&m, &top, true));
    }
}

#[test]
fn temperedness_on_exact_splittings() {
    let sys = BaseSystem::cat_map();
    let x = sys.point(&[0.27, 0.64]);
    for (c, f) in [jordan(), derivative(&sys)] {
        for eps in [0.05f64, 0.1, 0.3] {
            let n_trunc = (40.0 / eps).ceil() as usize;
            let ms = metrics_along(&c, &sys, &x, eps, &f, n_trunc, -20, 20, true).unwrap();
            let k0 = ms[20].k_eps;
            for (j, m) in ms.iter().enumerate() {
                let n = (j as f64 - 20.0).abs();
                let tau = 10.0 * m.truncation_tail.max(ms[20].truncation_tail) + 1e-12;
                let r = (m.k_eps / k0).ln();
                assert!(r.abs() <= eps * n + tau, "eps {eps}, n {n}: {r}");
            }
        }
    }
}
