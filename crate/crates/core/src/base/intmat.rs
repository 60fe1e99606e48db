//! Exact integer matrix arithmetic for toral automorphisms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub dim: usize,
    pub entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let dim = rows.len();
        let entries = rows.iter().flat_map(|r| r.iter().map(|&v| BigInt::from(v))).collect();
        IntMatrix { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = IntMatrix::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = BigInt::one();
        }
        m
    }

    pub fn zeros(dim: usize) -> Self {
        IntMatrix {
            dim,
            entries: vec![BigInt::zero(); dim * dim],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim;
        let mut out = IntMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = BigInt::zero();
                for k in 0..d {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).fold(BigInt::zero(), |acc, k| acc + self.get(i, k) * &v[k]))
            .collect()
    }

    pub fn pow(&self, mut n: u64) -> IntMatrix {
        let mut base = self.clone();
        let mut acc = IntMatrix::identity(self.dim);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn sub_identity(&self) -> IntMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            let v = m.get(i, i) - 1;
            m.set(i, i, v);
        }
        m
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let d = self.dim;
        if d == 0 {
            return BigInt::one();
        }
        let mut a = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..d - 1 {
            if a[k * d + k].is_zero() {
                let Some(swap) = (k + 1..d).find(|&r| !a[r * d + k].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..d {
                    a.swap(k * d + j, swap * d + j);
                }
                sign = -sign;
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    let v = &a[i * d + j] * &a[k * d + k] - &a[i * d + k] * &a[k * d + j];
                    a[i * d + j] = v / &prev;
                }
            }
            prev = a[k * d + k].clone();
        }
        sign * a[d * d - 1].clone()
    }

    /// Adjugate matrix, so that `self * adj = det * I`.
    pub fn adjugate(&self) -> IntMatrix {
        let d = self.dim;
        if d == 1 {
            return IntMatrix::identity(1);
        }
        let mut out = IntMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut minor = IntMatrix::zeros(d - 1);
                let rows = (0..d).filter(|&r| r != j);
                for (mi, r) in rows.enumerate() {
                    let cols = (0..d).filter(|&c| c != i);
                    for (mj, c) in cols.enumerate() {
                        minor.set(mi, mj, self.get(r, c).clone());
                    }
                }
                let cof = minor.det();
                out.set(i, j, if (i + j) % 2 == 0 { cof } else { -cof });
            }
        }
        out
    }

    /// Lower-triangular Hermite form `H = self * U` with `U` unimodular.
    /// Returns the diagonal of `H`; `∏ [0, H_ii)` is a complete set of
    /// representatives of `Z^d / self Z^d`.
    pub fn hermite_diagonal(&self) -> Vec<BigInt> {
        let d = self.dim;
        let mut h = self.entries.clone();
        for row in 0..d {
            // Column operations on columns row..d to clear entries right of the pivot.
            for col in row + 1..d {
                if h[row * d + col].is_zero() {
                    continue;
                }
                let a = h[row * d + row].clone();
                let b = h[row * d + col].clone();
                let egcd = a.extended_gcd(&b);
                let (g, x, y) = (egcd.gcd, egcd.x, egcd.y);
                let (p, q) = (&a / &g, &b / &g);
                for r in 0..d {
                    let cr = h[r * d + row].clone();
                    let cc = h[r * d + col].clone();
                    h[r * d + row] = &x * &cr + &y * &cc;
                    h[r * d + col] = &p * &cc - &q * &cr;
                }
            }
            if h[row * d + row].is_negative() {
                for r in 0..d {
                    let v = -h[r * d + row].clone();
                    h[r * d + row] = v;
                }
            }
        }
        (0..d).map(|i| h[i * d + i].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntMatrix {
        IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]])
    }

    #[test]
    fn determinants_of_cat_map_powers() {
        assert_eq!(cat().det(), BigInt::from(1));
        assert_eq!(cat().sub_identity().det(), BigInt::from(-1));
        assert_eq!(cat().pow(2).sub_identity().det(), BigInt::from(-5));
    }

    #[test]
    fn adjugate_identity() {
        let m = IntMatrix::from_rows(&[vec![2, 1, 0], vec![1, 1, 1], vec![0, 1, 3]]);
        let prod = m.mul(&m.adjugate());
        let det = m.det();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { det.clone() } else { BigInt::zero() };
                assert_eq!(prod.get(i, j), &want);
            }
        }
    }

    #[test]
    fn hermite_diagonal_product_is_abs_det() {
        for k in 1..8 {
            let b = cat().pow(k).sub_identity();
            let diag = b.hermite_diagonal();
            let prod: BigInt = diag.iter().product();
            assert_eq!(prod, b.det().abs());
        }
    }
}
