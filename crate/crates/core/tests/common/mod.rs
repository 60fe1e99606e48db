#![allow(dead_code)]

use std::path::PathBuf;

use lyapprox::base::{BaseSystem, Point};
use lyapprox::cocycle::CocycleSpec;
use nalgebra::DMatrix;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `log((3+√5)/2)`, the expansion rate of the cat map.
pub fn cat_rate() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

/// Unit stable and unstable directions of the cat map.
pub fn cat_directions() -> ([f64; 2], [f64; 2]) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let n = (1.0 + phi * phi).sqrt();
    ([1.0 / n, -phi / n], [phi / n, 1.0 / n])
}

/// A point whose orbit shadows the period-`k` point `p` at distance about
/// `delta`, largest at both ends of the segment.
pub fn shadowing_point(sys: &BaseSystem, p: &Point, k: u64, delta: f64) -> Point {
    let (es, eu) = cat_directions();
    let shrink = (-sys.gamma_hyp() * k as f64).exp();
    let d0 = delta / 2f64.sqrt();
    let pc = sys.coords(p);
    let xc: Vec<f64> = (0..2).map(|i| (pc[i] + d0 * (es[i] + shrink * eu[i])).rem_euclid(1.0)).collect();
    sys.point(&xc)
}

/// One instance of each built-in family over the cat map, `d ≤ 4`.
pub fn families(sys: &BaseSystem) -> Vec<(&'static str, CocycleSpec)> {
    let rot = CocycleSpec::diag_rotation(vec![0.7, -0.7], vec![1.0, 0.0], 0.0).unwrap();
    let rot3 = CocycleSpec::diag_rotation(vec![0.5, 0.1, -0.3], vec![1.0, 2.0], 0.3).unwrap();
    vec![
        (
            "constant",
            CocycleSpec::constant(DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.5])).unwrap(),
        ),
        ("identity", CocycleSpec::identity(2)),
        ("diagonal", CocycleSpec::diagonal(&[3.0, 0.5, 1.5]).unwrap()),
        ("diag_rotation", rot.clone()),
        ("diag_rotation_3", rot3.clone()),
        ("triangular", CocycleSpec::triangular(4, 1.1, 1.0, 0.25, vec![1.0, 0.0], 0.0).unwrap()),
        ("derivative", CocycleSpec::derivative(sys).unwrap()),
        ("exterior", rot3.exterior_power(2).unwrap()),
    ]
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    lyapprox::linalg::op_norm(&(a - b)) / lyapprox::linalg::op_norm(a).max(lyapprox::linalg::op_norm(b)).max(1e-300)
}

/// A point `x` with `dist(x, f^k x) < beta`: an exact period-`k` point moved
/// by `a·e_s + b·e_u` with `|a| ≤ beta/2` and `|b| ≤ (beta/2)·e^{-γk}`.
pub fn recurrence_instance<R: rand::Rng>(sys: &BaseSystem, rng: &mut R, k: u64, beta: f64) -> (Point, Point) {
    let seed = sys.point(&[rng.gen::<f64>(), rng.gen::<f64>()]);
    let p = sys.close_orbit(&seed, k).unwrap().p;
    let (es, eu) = cat_directions();
    let a = rng.gen_range(-0.5..0.5) * beta;
    let b = rng.gen_range(-0.5..0.5) * beta * (-sys.gamma_hyp() * k as f64).exp();
    let pc = sys.coords(&p);
    let xc: Vec<f64> = (0..2).map(|i| (pc[i] + a * es[i] + b * eu[i]).rem_euclid(1.0)).collect();
    (sys.point(&xc), p)
}

/// Good times by a direct double loop: for each start `i`, the products
/// `A(x_{n-1}) ⋯ A(x_i)` and their inverses are grown forward in `n`.
pub fn brute_force_good_times(
    c: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    n_max: usize,
    lambdas: [f64; 2],
    eps: f64,
    l: usize,
) -> Vec<usize> {
    let coords = sys.orbit_coords(x, n_max);
    let mats: Vec<DMatrix<f64>> = coords[..n_max].iter().map(|y| c.evaluate(y)).collect();
    let invs: Vec<DMatrix<f64>> = mats.iter().map(|m| m.clone().try_inverse().unwrap()).collect();
    let d = c.dim;
    // a_n(x) for both sequences.
    let mut head = [vec![0.0; n_max + 1], vec![0.0; n_max + 1]];
    let mut bad = vec![false; n_max + 1];
    for i in 0..n_max {
        let (mut fwd, mut inv) = (DMatrix::<f64>::identity(d, d), DMatrix::<f64>::identity(d, d));
        let (mut lf, mut li) = (0.0, 0.0);
        for n in i + 1..=n_max {
            fwd = &mats[n - 1] * fwd;
            inv *= &invs[n - 1];
            let (sf, si) = (fwd.norm(), inv.norm());
            fwd /= sf;
            inv /= si;
            lf += sf.ln();
            li += si.ln();
            let vals = [lf + lyapprox::linalg::op_norm(&fwd).ln(), li + lyapprox::linalg::op_norm(&inv).ln()];
            for s in 0..2 {
                if i == 0 {
                    head[s][n] = vals[s];
                } else if i >= l && head[s][n] - vals[s] < (lambdas[s] - eps) * i as f64 - 1e-9 {
                    bad[n] = true;
                }
            }
        }
    }
    // i = n, where the tail is a_0 = 0.
    for n in l.max(1)..=n_max {
        for s in 0..2 {
            if head[s][n] < (lambdas[s] - eps) * n as f64 - 1e-9 {
                bad[n] = true;
            }
        }
    }
    (l.max(1)..=n_max).filter(|&n| !bad[n]).collect()
}
