//! Small dense kernels: operator norms, scaled products, eigenvalue moduli,
//! compound matrices, subspace helpers.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`; dimensions are tiny
//! (d ≤ 6 for the spectral code, d ≤ a few hundred for norm-only products).

use nalgebra::{DMatrix, DVector};

/// Operator norm (largest singular value).
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    match (m.nrows(), m.ncols()) {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].abs(),
        (2, 2) => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let fro2 = a * a + b * b + c * c + d * d;
            let det = a * d - b * c;
            let disc = ((fro2 - 2.0 * det) * (fro2 + 2.0 * det)).max(0.0);
            ((fro2 + disc.sqrt()) / 2.0).sqrt()
        }
        _ => m.singular_values().max(),
    }
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn determinant(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

pub fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().lu().try_inverse()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// A matrix stored as `exp(log_scale) * mat`, renormalized so that
/// `mat` keeps unit max-entry. Long products are accumulated this way.
#[derive(Clone, Debug)]
pub struct ScaledMatrix {
    pub mat: DMatrix<f64>,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity(d: usize) -> Self {
        ScaledMatrix {
            mat: DMatrix::identity(d, d),
            log_scale: 0.0,
        }
    }

    pub fn renormalize(&mut self) {
        let s = max_abs(&self.mat);
        if s > 0.0 && s.is_finite() {
            self.mat /= s;
            self.log_scale += s.ln();
        }
    }

    pub fn log_norm(&self) -> f64 {
        op_norm(&self.mat).ln() + self.log_scale
    }

    /// The unscaled matrix; overflows to inf for large scales.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        &self.mat * self.log_scale.exp()
    }
}

/// Householder QR returning `(Q, R)` with the sign convention R_ii ≥ 0.
pub fn qr_positive(m: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    (q, r)
}

fn is_lower_triangular(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (i + 1..n).all(|j| m[(i, j)] == 0.0))
}

fn is_upper_triangular(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| m[(i, j)] == 0.0))
}

/// log |eigenvalue| for each eigenvalue (with multiplicity), ascending.
///
/// Exactly triangular input is read off the diagonal: Jordan-like blocks make
/// the Schur route lose all accuracy there. Otherwise the matrix is balanced
/// before the Schur decomposition.
pub fn log_eig_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out: Vec<f64> = if n == 1 {
        vec![m[(0, 0)].abs().ln()]
    } else if is_lower_triangular(m) || is_upper_triangular(m) {
        (0..n).map(|i| m[(i, i)].abs().ln()).collect()
    } else {
        let mut b = m.clone();
        nalgebra::linalg::balancing::balance_parlett_reinsch(&mut b);
        b.complex_eigenvalues().iter().map(|z| z.norm().ln()).collect()
    };
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// The `k`-th compound matrix: minors indexed by lexicographic `k`-subsets.
pub fn compound(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let sets = combinations(n, k);
    let c = sets.len();
    let mut out = DMatrix::zeros(c, c);
    for (r, rows) in sets.iter().enumerate() {
        for (s, cols) in sets.iter().enumerate() {
            let minor = DMatrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
            out[(r, s)] = if k == 1 { minor[(0, 0)] } else { determinant(&minor) };
        }
    }
    out
}

/// Orthonormal basis (columns) of the column span, dropping directions whose
/// singular value is below `tol` times the largest.
pub fn orthonormal_span(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis of the intersection of the column spans of two
/// orthonormal bases, expected to have dimension `dim`.
pub fn intersect_spans(a: &DMatrix<f64>, b: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let d = a.nrows();
    let (ka, kb) = (a.ncols(), b.ncols());
    let mut stacked = DMatrix::zeros(d, ka + kb);
    stacked.view_mut((0, 0), (d, ka)).copy_from(a);
    stacked.view_mut((0, ka), (d, kb)).copy_from(&(-b));
    // Null vectors of [A, -B] are right singular vectors with the smallest
    // singular values.
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    // When ka + kb > d the thin SVD omits the exact null space; pad with the
    // complement of the computed rows.
    let full_v = if vt.nrows() < ka + kb {
        let mut basis = vt.transpose();
        let extra = complement(&basis);
        let cols = basis.ncols();
        basis = basis.insert_columns(cols, extra.ncols(), 0.0);
        basis.view_mut((0, cols), (ka + kb, extra.ncols())).copy_from(&extra);
        order = (cols..cols + extra.ncols()).chain(order).collect();
        basis
    } else {
        vt.transpose()
    };
    let mut vecs = DMatrix::zeros(d, dim);
    for (c, &idx) in order.iter().take(dim).enumerate() {
        let coeff = full_v.view((0, idx), (ka, 1)).column(0).clone_owned();
        vecs.set_column(c, &(a * coeff));
    }
    orthonormal_span(&vecs, 1e-12)
}

/// Orthonormal basis of the orthogonal complement of an orthonormal column set.
pub fn complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let proj = DMatrix::identity(n, n) - q * q.transpose();
    let svd = proj.svd(true, false);
    let u = svd.u.expect("u requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let k = n - q.ncols();
    DMatrix::from_fn(n, k, |i, j| u[(i, idx[j])])
}

/// Deterministic quasi-uniform unit vectors in R^d: equally spaced angles for
/// d = 2, a Fibonacci lattice for d = 3, and a Kronecker sequence pushed
/// through Box–Muller otherwise.
pub fn sphere_samples(d: usize, count: usize) -> Vec<DVector<f64>> {
    use std::f64::consts::PI;
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    match d {
        0 => Vec::new(),
        1 => (0..count)
            .map(|i| DVector::from_element(1, if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * PI * i as f64 / golden;
                DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
            })
            .collect(),
        _ => {
            // Additive recurrence with irrational steps sqrt(prime).
            let primes: [f64; 12] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0];
            let m = d.div_ceil(2) * 2;
            (0..count)
                .map(|i| {
                    let u: Vec<f64> = (0..m)
                        .map(|j| {
                            let step = primes[j % primes.len()].sqrt() + (j / primes.len()) as f64;
                            ((i as f64 + 0.5) * step).fract().clamp(1e-12, 1.0 - 1e-12)
                        })
                        .collect();
                    let mut g = Vec::with_capacity(m);
                    for pair in u.chunks(2) {
                        let r = (-2.0 * pair[0].ln()).sqrt();
                        g.push(r * (2.0 * PI * pair[1]).cos());
                        g.push(r * (2.0 * PI * pair[1]).sin());
                    }
                    g.truncate(d);
                    let v = DVector::from_vec(g);
                    let n = v.norm();
                    v / n
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two_norm_matches_svd() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -3.0, 0.5]);
        assert_relative_eq!(op_norm(&m), m.singular_values().max(), epsilon = 1e-13);
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(3, 1).len(), 3);
        assert_eq!(binomial(6, 3), 20);
    }

    #[test]
    fn compound_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 5.0]));
        let c = compound(&m, 2);
        assert_eq!(c, DMatrix::from_diagonal(&DVector::from_vec(vec![6.0, 10.0, 15.0])));
        let top = compound(&m, 3);
        assert_relative_eq!(top[(0, 0)], 30.0, epsilon = 1e-12);
    }

    #[test]
    fn triangular_eigen_shortcut() {
        let mut m = DMatrix::identity(20, 20) * 1.1;
        for i in 1..20 {
            m[(i, i - 1)] = 1.0;
        }
        let p = m.pow(10);
        for v in log_eig_moduli(&p) {
            assert_relative_eq!(v, 10.0 * 1.1f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn intersection_of_planes_in_r3() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let s = 0.5f64.sqrt();
        let b = DMatrix::from_column_slice(3, 2, &[0.0, s, s, 0.0, s, -s]);
        let i = intersect_spans(&a, &b, 1);
        assert_relative_eq!(i[(1, 0)].abs(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sphere_samples_are_unit() {
        for d in 1..7 {
            for v in sphere_samples(d, 17) {
                assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
            }
        }
    }
}
