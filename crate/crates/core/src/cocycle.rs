//! Matrix cocycle families over a [`BaseSystem`], their products, inverses,
//! exterior powers and Hölder data.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

use crate::base::{BaseSystem, Point, ShiftPoint};
use crate::error::{Error, Result};
use crate::linalg;

/// Largest entry magnitude a raw product may reach.
pub const OVERFLOW_LIMIT: f64 = 1e280;

#[derive(Clone, Debug)]
pub enum Family {
    /// `A(x) = M`.
    Constant(DMatrix<f64>),
    /// `A(x) = R(2π(a·x + b)) · diag(e^c)`, with `R` rotating coordinates 0 and 1.
    DiagRotation {
        exponents: Vec<f64>,
        freq: Vec<f64>,
        phase: f64,
    },
    /// `A(x) = s I + h(x) N` where `N` is the lower shift (ones on the
    /// subdiagonal) and `h(x) = g (1 + eta cos 2π(a·x + b))`.
    Triangular {
        s: f64,
        g: f64,
        eta: f64,
        freq: Vec<f64>,
        phase: f64,
    },
    /// `A(x) = D_x f`, constant for a toral automorphism.
    Derivative(DMatrix<f64>),
    /// `A(x) = ∧^order B(x)`.
    Exterior { inner: Box<CocycleSpec>, order: usize },
}

/// A Hölder map from base points to invertible `dim × dim` matrices.
#[derive(Clone, Debug)]
pub struct CocycleSpec {
    pub dim: usize,
    pub family: Family,
    /// Lower bound with `‖A(x)^-1‖ ≤ e^{-lambda_star}`, once sampled.
    pub lambda_star: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub m_const: f64,
    pub sample_count: usize,
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(u, v)| u * v).sum()
}

impl CocycleSpec {
    fn new(dim: usize, family: Family) -> Self {
        CocycleSpec {
            dim,
            family,
            lambda_star: None,
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Config("constant cocycle needs a nonempty square matrix".into()));
        }
        if linalg::determinant(&m).abs() < 1e-300 {
            return Err(Error::Config("constant cocycle matrix is singular".into()));
        }
        Ok(Self::new(m.nrows(), Family::Constant(m)))
    }

    pub fn identity(d: usize) -> Self {
        Self::new(d, Family::Constant(DMatrix::identity(d, d)))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::constant(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }

    pub fn diag_rotation(exponents: Vec<f64>, freq: Vec<f64>, phase: f64) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::Config("diag_rotation needs at least one exponent".into()));
        }
        Ok(Self::new(
            exponents.len(),
            Family::DiagRotation {
                exponents,
                freq,
                phase,
            },
        ))
    }

    pub fn triangular(dim: usize, s: f64, g: f64, eta: f64, freq: Vec<f64>, phase: f64) -> Result<Self> {
        if dim == 0 || s == 0.0 || !s.is_finite() || !g.is_finite() || eta.abs() > 1.0 {
            return Err(Error::Config("triangular needs dim ≥ 1, s ≠ 0, |eta| ≤ 1".into()));
        }
        Ok(Self::new(
            dim,
            Family::Triangular {
                s,
                g,
                eta,
                freq,
                phase,
            },
        ))
    }

    pub fn derivative(sys: &BaseSystem) -> Result<Self> {
        let m = sys
            .derivative()
            .ok_or_else(|| Error::Config("derivative cocycle needs a toral base".into()))?;
        Ok(Self::new(m.nrows(), Family::Derivative(m)))
    }

    /// The same triangular family on a different truncation dimension.
    pub fn with_dim(&self, dim: usize) -> Option<Self> {
        match &self.family {
            Family::Triangular { .. } => Some(Self::new(dim, self.family.clone())),
            _ => None,
        }
    }

    /// True when `A(x)` does not depend on `x`.
    pub fn is_constant(&self) -> bool {
        match &self.family {
            Family::Constant(_) | Family::Derivative(_) => true,
            Family::DiagRotation { freq, .. } => freq.iter().all(|&a| a == 0.0),
            Family::Triangular { eta, freq, .. } => *eta == 0.0 || freq.iter().all(|&a| a == 0.0),
            Family::Exterior { inner, .. } => inner.is_constant(),
        }
    }

    /// `A(x)` for a point with cocycle coordinates `coords`.
    pub fn evaluate(&self, coords: &[f64]) -> DMatrix<f64> {
        match &self.family {
            Family::Constant(m) | Family::Derivative(m) => m.clone(),
            Family::DiagRotation {
                exponents,
                freq,
                phase,
            } => {
                let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    exponents.len(),
                    exponents.iter().map(|c| c.exp()),
                ));
                if self.dim >= 2 {
                    let t = 2.0 * PI * (dot(freq, coords) + phase);
                    let (sn, cs) = t.sin_cos();
                    let (e0, e1) = (m[(0, 0)], m[(1, 1)]);
                    m[(0, 0)] = cs * e0;
                    m[(0, 1)] = -sn * e1;
                    m[(1, 0)] = sn * e0;
                    m[(1, 1)] = cs * e1;
                }
                m
            }
            Family::Triangular { s, .. } => {
                let h = self.off_diagonal(coords);
                let mut m = DMatrix::from_diagonal_element(self.dim, self.dim, *s);
                for i in 1..self.dim {
                    m[(i, i - 1)] = h;
                }
                m
            }
            Family::Exterior { inner, order } => linalg::compound(&inner.evaluate(coords), *order),
        }
    }

    fn off_diagonal(&self, coords: &[f64]) -> f64 {
        match &self.family {
            Family::Triangular {
                g, eta, freq, phase, ..
            } => g * (1.0 + eta * (2.0 * PI * (dot(freq, coords) + phase)).cos()),
            _ => unreachable!("only the triangular family has an off-diagonal amplitude"),
        }
    }

    /// `A(x)^{-1}`.
    pub fn evaluate_inverse(&self, coords: &[f64]) -> DMatrix<f64> {
        match &self.family {
            Family::DiagRotation {
                exponents,
                freq,
                phase,
            } => {
                let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    exponents.len(),
                    exponents.iter().map(|c| (-c).exp()),
                ));
                if self.dim >= 2 {
                    let t = 2.0 * PI * (dot(freq, coords) + phase);
                    let (sn, cs) = t.sin_cos();
                    let (e0, e1) = (m[(0, 0)], m[(1, 1)]);
                    m[(0, 0)] = cs * e0;
                    m[(0, 1)] = sn * e0;
                    m[(1, 0)] = -sn * e1;
                    m[(1, 1)] = cs * e1;
                }
                m
            }
            Family::Triangular { .. } => {
                let mut m = DMatrix::identity(self.dim, self.dim);
                self.apply_inverse_right(coords, &mut m);
                m
            }
            Family::Exterior { inner, order } => linalg::compound(&inner.evaluate_inverse(coords), *order),
            Family::Constant(m) | Family::Derivative(m) => linalg::inverse(m).expect("validated invertible"),
        }
    }

    /// `m ← A(x) m`.
    pub fn apply_left(&self, coords: &[f64], m: &mut DMatrix<f64>) {
        match &self.family {
            Family::Triangular { s, .. } => {
                let h = self.off_diagonal(coords);
                for i in (0..self.dim).rev() {
                    for j in 0..m.ncols() {
                        let below = if i > 0 { m[(i - 1, j)] } else { 0.0 };
                        m[(i, j)] = s * m[(i, j)] + h * below;
                    }
                }
            }
            _ => *m = self.evaluate(coords) * &*m,
        }
    }

    /// `m ← m A(x)^{-1}`.
    pub fn apply_inverse_right(&self, coords: &[f64], m: &mut DMatrix<f64>) {
        match &self.family {
            Family::Triangular { s, .. } => {
                // Solve X (sI + hN) = m column by column from the right.
                let h = self.off_diagonal(coords);
                let d = self.dim;
                for j in (0..d).rev() {
                    for r in 0..m.nrows() {
                        let next = if j + 1 < d { m[(r, j + 1)] } else { 0.0 };
                        m[(r, j)] = (m[(r, j)] - h * next) / s;
                    }
                }
            }
            _ => *m = &*m * self.evaluate_inverse(coords),
        }
    }

    /// `A(x)` at a base point.
    pub fn at(&self, sys: &BaseSystem, x: &Point) -> DMatrix<f64> {
        self.evaluate(&sys.coords(x))
    }

    /// `A^n_x`: `A(f^{n-1}x) ⋯ A(x)` for `n ≥ 0` and `(A^{-n}_{f^n x})^{-1}`
    /// for `n < 0`.
    pub fn product(&self, sys: &BaseSystem, x: &Point, n: i64) -> Result<DMatrix<f64>> {
        let mut p = DMatrix::identity(self.dim, self.dim);
        let mut cur = x.clone();
        for step in 0..n.unsigned_abs() as usize {
            if n > 0 {
                self.apply_left(&sys.coords(&cur), &mut p);
                cur = sys.step(&cur, 1);
            } else {
                cur = sys.step(&cur, -1);
                let inv = self.evaluate_inverse(&sys.coords(&cur));
                p = inv * p;
            }
            if linalg::max_abs(&p) > OVERFLOW_LIMIT || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow {
                    steps: step + 1,
                    limit: OVERFLOW_LIMIT,
                });
            }
        }
        Ok(p)
    }

    /// The cocycle `∧^i A` on the `C(d, i)`-dimensional exterior power.
    pub fn exterior_power(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.dim {
            return Err(Error::Config(format!("exterior order {i} outside 1..={}", self.dim)));
        }
        if i == 1 {
            return Ok(self.clone());
        }
        Ok(Self::new(
            linalg::binomial(self.dim, i),
            Family::Exterior {
                inner: Box::new(self.clone()),
                order: i,
            },
        ))
    }

    /// Largest sampled `(‖A_x − A_y‖ + ‖A_x^{-1} − A_y^{-1}‖) / dist(x,y)^α`.
    /// Half of the pairs are near-coincident (distance below 1e-3).
    pub fn holder_estimate<R: Rng + ?Sized>(
        &self,
        sys: &BaseSystem,
        samples: usize,
        alpha: f64,
        rng: &mut R,
    ) -> Result<HolderEstimate> {
        if samples < 2 || !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config("holder_estimate needs samples ≥ 2 and alpha in (0, 1]".into()));
        }
        let mut m_const: f64 = 0.0;
        for s in 0..samples {
            let x = sys.random_point(rng, 0);
            let y = if s % 2 == 0 {
                near_point(sys, &x, s / 2, rng)
            } else {
                sys.random_point(rng, 0)
            };
            let d = sys.dist(&x, &y);
            if d == 0.0 {
                continue;
            }
            let (cx, cy) = (sys.coords(&x), sys.coords(&y));
            let num = linalg::op_norm(&(self.evaluate(&cx) - self.evaluate(&cy)))
                + linalg::op_norm(&(self.evaluate_inverse(&cx) - self.evaluate_inverse(&cy)));
            m_const = m_const.max(num / d.powf(alpha));
        }
        Ok(HolderEstimate {
            alpha,
            m_const,
            sample_count: samples,
        })
    }

    /// `-log max ‖A(x)^{-1}‖` over sampled points; also stored in
    /// `lambda_star`.
    pub fn inverse_bound<R: Rng + ?Sized>(&mut self, sys: &BaseSystem, samples: usize, rng: &mut R) -> f64 {
        let worst = (0..samples.max(1))
            .map(|_| {
                let x = sys.random_point(rng, 0);
                linalg::op_norm(&self.evaluate_inverse(&sys.coords(&x)))
            })
            .fold(0.0_f64, f64::max);
        let bound = -worst.ln();
        self.lambda_star = Some(bound);
        bound
    }
}

/// A point within distance about 1e-3 .. 1e-6 of `x`. Torus perturbations
/// alternate between coordinate axes and random directions.
fn near_point<R: Rng + ?Sized>(sys: &BaseSystem, x: &Point, idx: usize, rng: &mut R) -> Point {
    match x {
        Point::Torus(t) => {
            let scale = 10f64.powf(-rng.gen_range(3.0..6.0));
            let mut c = t.coords();
            let d = c.len();
            if idx % 2 == 0 {
                c[(idx / 2) % d] += scale;
            } else {
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
                c.iter_mut().zip(&v).for_each(|(ci, vi)| *ci += scale * vi / n);
            }
            sys.point(&c)
        }
        Point::Shift(s) => {
            let m: i64 = rng.gen_range(10..20);
            let reach = m + 64;
            let window = (-reach..=reach)
                .map(|n| {
                    if n.abs() < m {
                        s.symbol(n)
                    } else {
                        rng.gen_range(0..s.alphabet()) as u8
                    }
                })
                .collect();
            Point::Shift(ShiftPoint::new(s.alphabet(), window, -reach, vec![0]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        let scale = linalg::max_abs(a).max(linalg::max_abs(b)).max(1.0);
        linalg::max_abs(&(a - b)) <= tol * scale
    }

    #[test]
    fn constant_and_derivative_values() {
        let c = CocycleSpec::diagonal(&[2.0, 0.5]).unwrap();
        assert_eq!(c.evaluate(&[0.3, 0.1]), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]));
        let sys = BaseSystem::cat_map();
        let d = CocycleSpec::derivative(&sys).unwrap();
        assert_eq!(d.evaluate(&[0.4, 0.9]), DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]));
    }

    #[test]
    fn zero_frequency_rotation_is_constant() {
        let c = CocycleSpec::diag_rotation(vec![0.7, -0.7], vec![0.0, 0.0], 0.125).unwrap();
        let a = c.evaluate(&[0.3, 0.8]);
        let b = c.evaluate(&[0.9, 0.1]);
        assert!(close(&a, &b, 0.0));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let want = DMatrix::from_row_slice(2, 2, &[r, -r, r, r])
            * DMatrix::from_row_slice(2, 2, &[0.7f64.exp(), 0.0, 0.0, (-0.7f64).exp()]);
        assert!(close(&a, &want, 1e-15));
    }

    #[test]
    fn analytic_inverses() {
        let rot = CocycleSpec::diag_rotation(vec![0.7, -0.2, 0.3], vec![1.0, 0.5], 0.1).unwrap();
        let tri = CocycleSpec::triangular(6, 1.1, 1.0, 0.25, vec![1.0, 0.0], 0.2).unwrap();
        for c in [rot, tri] {
            let x = [0.31, 0.77];
            let prod = c.evaluate(&x) * c.evaluate_inverse(&x);
            assert!(close(&prod, &DMatrix::identity(c.dim, c.dim), 1e-13));
        }
    }

    #[test]
    fn triangular_fast_paths_match_dense() {
        let c = CocycleSpec::triangular(5, 1.1, 0.8, 0.5, vec![1.0, 2.0], 0.3).unwrap();
        let x = [0.2, 0.6];
        let m = DMatrix::from_fn(5, 5, |i, j| (i * 7 + j * 3) as f64 / 11.0 - 1.0);
        let mut left = m.clone();
        c.apply_left(&x, &mut left);
        assert!(close(&left, &(c.evaluate(&x) * &m), 1e-14));
        let mut right = m.clone();
        c.apply_inverse_right(&x, &mut right);
        let dense = &m * linalg::inverse(&c.evaluate(&x)).unwrap();
        assert!(close(&right, &dense, 1e-12));
    }

    #[test]
    fn exterior_powers() {
        let c = CocycleSpec::diagonal(&[2.0, 3.0, 5.0]).unwrap();
        let w = c.exterior_power(2).unwrap();
        assert_eq!(w.dim, 3);
        let v = w.evaluate(&[0.0, 0.0]);
        assert!(close(&v, &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![6.0, 10.0, 15.0])), 1e-14));
        let r = CocycleSpec::diag_rotation(vec![0.7, -0.7], vec![1.0, 0.0], 0.0).unwrap();
        let top = r.exterior_power(2).unwrap().evaluate(&[0.3, 0.4]);
        assert!((top[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(r.exterior_power(3).is_err());
    }

    #[test]
    fn products_and_powers() {
        let sys = BaseSystem::cat_map();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 3.0]);
        let c = CocycleSpec::constant(a.clone()).unwrap();
        let x = sys.point(&[0.1, 0.2]);
        assert!(close(&c.product(&sys, &x, 0).unwrap(), &DMatrix::identity(2, 2), 0.0));
        assert!(close(&c.product(&sys, &x, 3).unwrap(), &(&a * &a * &a), 1e-14));
        let inv = linalg::inverse(&a).unwrap();
        assert!(close(&c.product(&sys, &x, -2).unwrap(), &(&inv * &inv), 1e-14));
    }

    #[test]
    fn overflow_is_reported() {
        let sys = BaseSystem::cat_map();
        let c = CocycleSpec::diagonal(&[1e200, 1.0]).unwrap();
        let x = sys.point(&[0.1, 0.2]);
        assert!(matches!(c.product(&sys, &x, 2), Err(Error::Overflow { steps: 2, .. })));
    }

    #[test]
    fn inverse_bounds() {
        let sys = BaseSystem::cat_map();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = CocycleSpec::diagonal(&[2.0, 0.5]).unwrap();
        assert!((c.inverse_bound(&sys, 5, &mut rng) + 2f64.ln()).abs() < 1e-12);
        assert_eq!(c.lambda_star, Some(-(2f64.ln())));
        let mut id = CocycleSpec::identity(3);
        assert_eq!(id.inverse_bound(&sys, 5, &mut rng), 0.0);
        let mut r = CocycleSpec::diag_rotation(vec![0.7, -0.7], vec![1.0, 0.0], 0.0).unwrap();
        assert!((r.inverse_bound(&sys, 50, &mut rng) + 0.7).abs() < 1e-6);
    }

    #[test]
    fn holder_constants() {
        let sys = BaseSystem::cat_map();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = CocycleSpec::diagonal(&[2.0, 0.5]).unwrap();
        assert_eq!(c.holder_estimate(&sys, 50, 1.0, &mut rng).unwrap().m_const, 0.0);
        let d = CocycleSpec::derivative(&sys).unwrap();
        assert_eq!(d.holder_estimate(&sys, 50, 1.0, &mut rng).unwrap().m_const, 0.0);
        // ‖R(t)D − R(t')D‖ + ‖D⁻¹R(−t) − D⁻¹R(−t')‖ ≈ |t − t'| (e^{max c} + e^{−min c}),
        // with |t − t'| ≤ 2π |x₁ − y₁|.
        let r = CocycleSpec::diag_rotation(vec![0.7, -0.7], vec![1.0, 0.0], 0.0).unwrap();
        let est = r.holder_estimate(&sys, 400, 1.0, &mut rng).unwrap();
        let want = 2.0 * PI * (0.7f64.exp() + 0.7f64.exp());
        assert!((est.m_const / want - 1.0).abs() < 0.2, "{} vs {}", est.m_const, want);
        assert!(c.holder_estimate(&sys, 1, 1.0, &mut rng).is_err());
    }
}
