//! Telescoping comparison of `A^n_x` and `A^n_p` along a shadowing pair.

use nalgebra::DMatrix;

use crate::base::{shadow_delta, BaseSystem, Point};
use crate::cocycle::CocycleSpec;
use crate::linalg;

/// Residual tolerance for the telescoping identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct TelescopeReport {
    pub k: u64,
    pub n: u64,
    /// `‖A^n_x − A^n_p‖`.
    pub lhs: f64,
    /// `‖A^{n−i−1}_{x_{i+1}}‖ ‖A_{x_i} − A_{p_i}‖ ‖A^i_p‖`, `i = 0..n`.
    pub terms: Vec<f64>,
    pub rhs: f64,
    /// `‖A^n_x‖`.
    pub norm_x: f64,
    /// `‖(A^n_x − A^n_p) − Σ A^{n−i−1}_{x_{i+1}} (A_{x_i} − A_{p_i}) A^i_p‖ / max(1, ‖A^n_x‖)`.
    pub identity_residual: f64,
    pub identity_holds: bool,
    /// `rhs ≤ ‖A^n_x‖ / 2`.
    pub dominance: bool,
    /// `max_i dist(x_i, p_i) e^{γ min(i, k−i)}` over `0 ≤ i ≤ k`, with the
    /// base's `gamma_hyp`.
    pub delta: f64,
}

impl TelescopeReport {
    /// `n ≤ k / (1 + σ)`, the range where the decay of `‖A_{x_i} − A_{p_i}‖`
    /// is guaranteed to beat the growth of the products.
    pub fn within_range(&self, sigma: f64) -> bool {
        self.n as f64 <= self.k as f64 / (1.0 + sigma)
    }
}

/// Evaluate both sides of the telescoping identity for `A^n` at `x` and at
/// the period-`k` point `p`.
pub fn telescope_diagnostic(coc: &CocycleSpec, sys: &BaseSystem, x: &Point, p: &Point, k: u64, n: u64) -> TelescopeReport {
    let d = coc.dim;
    let steps = n.max(k) as usize;
    let xs = sys.orbit(x, steps);
    let ps = sys.orbit(p, steps);
    let nu = n as usize;
    let ax: Vec<DMatrix<f64>> = xs[..nu].iter().map(|y| coc.at(sys, y)).collect();
    let ap: Vec<DMatrix<f64>> = ps[..nu].iter().map(|y| coc.at(sys, y)).collect();
    // prefix_p[i] = A^i_p, suffix_x[i] = A^{n-i}_{x_i}.
    let prefix = |mats: &[DMatrix<f64>]| {
        let mut out = vec![DMatrix::<f64>::identity(d, d)];
        for a in mats {
            let next = a * out.last().unwrap();
            out.push(next);
        }
        out
    };
    let prefix_p = prefix(&ap);
    let an_x = prefix(&ax).pop().unwrap();
    let mut suffix_x = vec![DMatrix::<f64>::identity(d, d); nu + 1];
    for i in (0..nu).rev() {
        suffix_x[i] = &suffix_x[i + 1] * &ax[i];
    }
    let diff = &an_x - &prefix_p[nu];
    let mut sum = DMatrix::<f64>::zeros(d, d);
    let mut terms = Vec::with_capacity(nu);
    for i in 0..nu {
        let jump = &ax[i] - &ap[i];
        sum += &suffix_x[i + 1] * &jump * &prefix_p[i];
        terms.push(linalg::op_norm(&suffix_x[i + 1]) * linalg::op_norm(&jump) * linalg::op_norm(&prefix_p[i]));
    }
    let norm_x = linalg::op_norm(&an_x);
    let identity_residual = linalg::op_norm(&(&diff - &sum)) / norm_x.max(1.0);
    let rhs: f64 = terms.iter().sum();
    let dists: Vec<f64> = (0..=k as usize).map(|i| sys.dist(&xs[i], &ps[i])).collect();
    TelescopeReport {
        k,
        n,
        lhs: linalg::op_norm(&diff),
        rhs,
        norm_x,
        identity_holds: identity_residual < IDENTITY_TOLERANCE,
        identity_residual,
        dominance: rhs <= norm_x / 2.0,
        delta: shadow_delta(&dists, sys.gamma_hyp()),
        terms,
    }
}
