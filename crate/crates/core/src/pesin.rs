//! Lyapunov norms, Pesin-set membership, norm inequalities, cone invariance
//! along shadowing orbits and the drift bound for closed orbits.
//!
//! The full Lyapunov scalar product needs an Oseledets splitting at every
//! orbit point the series visits. [`SplittingField`] supplies it: a fixed
//! splitting for cocycles that do not depend on the point, otherwise a
//! numerical splitting computed at each point. The series for a block is
//! evaluated through the cocycle restricted to that block, expressed in the
//! block bases, so numerical leakage between blocks never enters the sums.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{shadow_delta, BaseSystem, Point};
use crate::cocycle::CocycleSpec;
use crate::error::{Error, Result};
use crate::exponents::{oseledets_splitting, OseledetsSplitting, SpectrumEstimate};
use crate::linalg::{self, ScaledMatrix};

/// Relative tail size above which a truncated series is rejected.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// `(λ_i, orthonormal basis of E^i)` ascending in `λ_i`.
pub type Blocks = Vec<(f64, DMatrix<f64>)>;

/// Default truncation `ceil(40 / ε)`.
pub fn default_truncation(eps: f64) -> usize {
    (40.0 / eps).ceil() as usize
}

/// Oseledets data available at every point of an orbit.
#[derive(Clone, Debug)]
pub enum SplittingField {
    /// The same splitting everywhere (exact for point-independent cocycles).
    Fixed(Blocks),
    /// `oseledets_splitting` evaluated at each point.
    Numerical { spectrum: SpectrumEstimate, n: usize },
}

impl SplittingField {
    pub fn fixed(s: &OseledetsSplitting) -> Self {
        SplittingField::Fixed(s.subspaces.clone())
    }

    /// Fixed for point-independent cocycles, numerical otherwise.
    pub fn for_cocycle(
        coc: &CocycleSpec,
        sys: &BaseSystem,
        x: &Point,
        spectrum: &SpectrumEstimate,
        n: usize,
    ) -> Result<Self> {
        if coc.is_constant() {
            Ok(SplittingField::fixed(&oseledets_splitting(coc, sys, x, n, spectrum)?))
        } else {
            Ok(SplittingField::Numerical {
                spectrum: spectrum.clone(),
                n,
            })
        }
    }

    /// The field with the labels of the top two blocks exchanged, which no
    /// longer matches the growth rates (a negative control).
    pub fn swapped(&self) -> Self {
        match self {
            SplittingField::Fixed(b) if b.len() >= 2 => {
                let mut out = b.clone();
                let m = out.len();
                let (lo, hi) = (out[m - 2].0, out[m - 1].0);
                out[m - 2].0 = hi;
                out[m - 1].0 = lo;
                SplittingField::Fixed(out)
            }
            other => other.clone(),
        }
    }

    pub fn group_count(&self) -> usize {
        match self {
            SplittingField::Fixed(b) => b.len(),
            SplittingField::Numerical { spectrum, .. } => spectrum.groups.len(),
        }
    }

    fn at(&self, coc: &CocycleSpec, sys: &BaseSystem, x: &Point) -> Result<Blocks> {
        match self {
            SplittingField::Fixed(b) => Ok(b.clone()),
            SplittingField::Numerical { spectrum, n } => {
                Ok(oseledets_splitting(coc, sys, x, *n, spectrum)?.subspaces)
            }
        }
    }
}

/// Splittings and restricted transition matrices along `x_lo ..= x_hi`.
struct OrbitWindow {
    lo: i64,
    blocks: Vec<Blocks>,
    /// `inv_basis[j]` is the inverse of the concatenated basis at `x_{lo+j}`.
    inv_basis: Vec<DMatrix<f64>>,
    /// `trans[j][b]`: block `b` of `A(x_{lo+j})` from `x_{lo+j}` to `x_{lo+j+1}`.
    trans: Vec<Vec<DMatrix<f64>>>,
    d: usize,
}

fn concat(blocks: &Blocks) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = blocks
        .iter()
        .flat_map(|(_, b)| b.column_iter().map(|c| c.clone_owned()))
        .collect();
    DMatrix::from_columns(&cols)
}

fn offsets(blocks: &Blocks) -> Vec<usize> {
    let mut out = vec![0];
    for (_, b) in blocks {
        out.push(out.last().unwrap() + b.ncols());
    }
    out
}

impl OrbitWindow {
    fn new(coc: &CocycleSpec, sys: &BaseSystem, x: &Point, lo: i64, hi: i64, field: &SplittingField) -> Result<Self> {
        let start = sys.step(x, lo);
        let len = (hi - lo + 1) as usize;
        let coords = sys.orbit_coords(&start, len);
        let mut blocks = Vec::with_capacity(len);
        match field {
            SplittingField::Fixed(b) => blocks.resize(len, b.clone()),
            SplittingField::Numerical { .. } => {
                let mut cur = start.clone();
                for _ in 0..len {
                    blocks.push(field.at(coc, sys, &cur)?);
                    cur = sys.step(&cur, 1);
                }
            }
        }
        let d = coc.dim;
        let inv_basis: Vec<DMatrix<f64>> = blocks
            .iter()
            .map(|b| {
                linalg::inverse(&concat(b)).ok_or_else(|| Error::ClusterError("splitting bases are dependent".into()))
            })
            .collect::<Result<_>>()?;
        let mut trans = Vec::with_capacity(len.saturating_sub(1));
        for j in 0..len.saturating_sub(1) {
            let a = coc.evaluate(&coords[j]);
            let off = offsets(&blocks[j + 1]);
            let per_block = blocks[j]
                .iter()
                .enumerate()
                .map(|(bi, (_, basis))| {
                    let coeff = &inv_basis[j + 1] * (&a * basis);
                    coeff.rows(off[bi], off[bi + 1] - off[bi]).clone_owned()
                })
                .collect();
            trans.push(per_block);
        }
        Ok(OrbitWindow {
            lo,
            blocks,
            inv_basis,
            trans,
            d,
        })
    }

    fn idx(&self, n: i64) -> usize {
        (n - self.lo) as usize
    }

    /// Block `bi` of `A^n_{x_0}` in block coordinates for `n = -m ..= m`.
    fn restricted_products(&self, bi: usize, m: i64) -> Result<Vec<DMatrix<f64>>> {
        let c = self.idx(0);
        let dim = self.blocks[c][bi].1.ncols();
        let mut out = vec![DMatrix::identity(dim, dim); 2 * m as usize + 1];
        let mut w = DMatrix::<f64>::identity(dim, dim);
        for n in 1..=m as usize {
            w = &self.trans[c + n - 1][bi] * &w;
            out[m as usize + n] = w.clone();
        }
        let mut w = DMatrix::<f64>::identity(dim, dim);
        for n in 1..=m as usize {
            let t = linalg::inverse(&self.trans[c - n][bi])
                .ok_or_else(|| Error::ClusterError("restricted cocycle is singular".into()))?;
            w = t * &w;
            out[m as usize - n] = w.clone();
        }
        Ok(out)
    }

    fn metric(&self, center: i64, eps: f64, n_trunc: usize, strict: bool) -> Result<LyapunovMetricData> {
        let c = self.idx(center);
        let blocks = &self.blocks[c];
        let d = self.d as f64;
        let ratio = (-eps).exp();
        let mut grams = Vec::with_capacity(blocks.len());
        let mut tail: f64 = 0.0;
        for (bi, (lam, basis)) in blocks.iter().enumerate() {
            let m = basis.ncols();
            let mut g = DMatrix::<f64>::identity(m, m);
            let mut recent: f64 = 0.0;
            let mut w = DMatrix::<f64>::identity(m, m);
            for n in 1..=n_trunc {
                w = (&self.trans[c + n - 1][bi] * &w) * (-lam).exp();
                let term = w.transpose() * &w * ratio.powi(n as i32);
                if !add_term(&mut g, term, n, n_trunc, &mut recent) {
                    break;
                }
            }
            let mut w = DMatrix::<f64>::identity(m, m);
            for n in 1..=n_trunc {
                let t = linalg::inverse(&self.trans[c - n][bi])
                    .ok_or_else(|| Error::ClusterError("restricted cocycle is singular".into()))?;
                w = (t * &w) * lam.exp();
                let term = w.transpose() * &w * ratio.powi(n as i32);
                if !add_term(&mut g, term, n, n_trunc, &mut recent) {
                    break;
                }
            }
            g *= d;
            tail = tail.max(2.0 * d * recent * ratio / (1.0 - ratio));
            grams.push(g);
        }
        let leading = d;
        if strict && !(tail <= TAIL_TOLERANCE * leading) {
            return Err(Error::TailTooLarge { tail, leading });
        }
        let off = offsets(blocks);
        let mut block_diag = DMatrix::zeros(self.d, self.d);
        for (bi, g) in grams.iter().enumerate() {
            block_diag.view_mut((off[bi], off[bi]), (g.nrows(), g.ncols())).copy_from(g);
        }
        let tinv = &self.inv_basis[c];
        let gram = tinv.transpose() * block_diag * tinv;
        let gram = (&gram + gram.transpose()) * 0.5;
        let k_eps = gram.symmetric_eigenvalues().max().sqrt();
        Ok(LyapunovMetricData {
            eps,
            gram,
            n_trunc,
            truncation_tail: tail,
            k_eps,
            blocks: blocks.clone(),
            block_grams: grams,
        })
    }
}

/// Add one series term; a diverging series (a splitting whose labels do not
/// match the growth rates) is cut off and its tail marked infinite.
fn add_term(g: &mut DMatrix<f64>, term: DMatrix<f64>, n: usize, n_trunc: usize, recent: &mut f64) -> bool {
    let size = linalg::op_norm(&term);
    if !(size < 1e100) {
        *recent = f64::INFINITY;
        return false;
    }
    if n + 10 > n_trunc {
        *recent = recent.max(size);
    }
    *g += term;
    true
}

/// The Lyapunov scalar product at one point.
#[derive(Clone, Debug)]
pub struct LyapunovMetricData {
    pub eps: f64,
    /// `⟨u, v⟩_{x,ε} = uᵀ gram v`.
    pub gram: DMatrix<f64>,
    pub n_trunc: usize,
    pub truncation_tail: f64,
    pub k_eps: f64,
    pub blocks: Blocks,
    /// Gram matrix of each block in its own basis.
    pub block_grams: Vec<DMatrix<f64>>,
}

impl LyapunovMetricData {
    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        (u.dot(&(&self.gram * u))).max(0.0).sqrt()
    }

    /// `S` with `‖u‖_{x,ε} = ‖S u‖`.
    fn sqrt_factor(&self) -> DMatrix<f64> {
        self.gram
            .clone()
            .cholesky()
            .map(|c| c.l().transpose())
            .unwrap_or_else(|| {
                let e = self.gram.clone().symmetric_eigen();
                let s = e.eigenvalues.map(|v| v.max(0.0).sqrt());
                DMatrix::from_diagonal(&s) * e.eigenvectors.transpose()
            })
    }

    /// Smallest eigenvalue of the gram matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.gram.symmetric_eigenvalues().min()
    }

    /// Block coordinates of `u` and the Lyapunov norm of each component.
    /// `‖u₂‖ / ‖u₁‖` for the top block `u₁` and the remaining blocks `u₂`,
    /// in the Lyapunov norm.
    pub fn cone_ratio(&self, u: &DVector<f64>) -> f64 {
        let (top, rest) = self.split_norms(u);
        if rest == 0.0 {
            0.0
        } else {
            rest / top
        }
    }

    fn split_norms(&self, u: &DVector<f64>) -> (f64, f64) {
        let c = self.component_norms(u);
        let top = *c.last().unwrap();
        let rest = c[..c.len() - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
        (top, rest)
    }

    fn component_norms(&self, u: &DVector<f64>) -> Vec<f64> {
        let t = concat(&self.blocks);
        let c = linalg::inverse(&t).expect("independent blocks") * u;
        let off = offsets(&self.blocks);
        self.block_grams
            .iter()
            .enumerate()
            .map(|(bi, g)| {
                let ci = c.rows(off[bi], off[bi + 1] - off[bi]).clone_owned();
                ci.dot(&(g * &ci)).max(0.0).sqrt()
            })
            .collect()
    }

    /// Lyapunov-orthonormal basis of each block: `B_j G_j^{-1/2}`.
    fn normalized_blocks(&self) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .zip(&self.block_grams)
            .map(|((_, b), g)| {
                let e = g.clone().symmetric_eigen();
                let s = e.eigenvalues.map(|v| 1.0 / v.sqrt());
                b * (&e.eigenvectors * DMatrix::from_diagonal(&s) * e.eigenvectors.transpose())
            })
            .collect()
    }
}

/// `‖A‖_{y ← x}` with respect to the two Lyapunov norms.
pub fn lyapunov_operator_norm(y: &LyapunovMetricData, a: &DMatrix<f64>, x: &LyapunovMetricData) -> f64 {
    let sx_inv = linalg::inverse(&x.sqrt_factor()).expect("positive definite gram");
    linalg::op_norm(&(y.sqrt_factor() * a * sx_inv))
}

/// Gram data of `⟨·,·⟩_{x,ε}` with the series truncated at `|n| ≤ n_trunc`.
pub fn lyapunov_gram(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    eps: f64,
    field: &SplittingField,
    n_trunc: usize,
) -> Result<LyapunovMetricData> {
    gram_impl(coc, sys, x, eps, field, n_trunc, true)
}

/// As [`lyapunov_gram`] but reports a large tail instead of failing.
pub fn lyapunov_gram_lenient(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    eps: f64,
    field: &SplittingField,
    n_trunc: usize,
) -> Result<LyapunovMetricData> {
    gram_impl(coc, sys, x, eps, field, n_trunc, false)
}

fn gram_impl(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    eps: f64,
    field: &SplittingField,
    n_trunc: usize,
    strict: bool,
) -> Result<LyapunovMetricData> {
    check_eps(eps)?;
    let n = n_trunc as i64;
    let window = OrbitWindow::new(coc, sys, x, -n, n, field)?;
    window.metric(0, eps, n_trunc, strict)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("eps must be positive and finite, got {eps}")))
    }
}

/// Lyapunov metrics at `x_i` for `i ∈ lo ..= hi`, sharing one orbit window.
pub fn metrics_along(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    eps: f64,
    field: &SplittingField,
    n_trunc: usize,
    lo: i64,
    hi: i64,
    strict: bool,
) -> Result<Vec<LyapunovMetricData>> {
    check_eps(eps)?;
    let n = n_trunc as i64;
    let window = OrbitWindow::new(coc, sys, x, lo - n, hi + n, field)?;
    (lo..=hi).map(|i| window.metric(i, eps, n_trunc, strict)).collect()
}

/// `‖u‖_x = Σ_{n≥0} ‖A^n_x u‖ e^{-(λ₊+ε)n} + Σ_{n≥1} ‖A^{-n}_x u‖ e^{(λ₋-ε)n}`,
/// truncated at `n_trunc`. Returns the value and the estimated tail.
pub fn lyapunov_norm_pm(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    u: &DVector<f64>,
    eps: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    n_trunc: usize,
) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let u0 = u.norm();
    if u0 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut total = u0;
    let mut recent: f64 = 0.0;
    let mut ratios = Vec::new();
    // Forward sum with the weight folded into the iterate.
    let mut v = u.clone();
    let mut cur = x.clone();
    let fwd_w = (-(lambda_plus + eps)).exp();
    let mut prev = u0;
    for n in 1..=n_trunc {
        v = coc.evaluate(&sys.coords(&cur)) * v * fwd_w;
        cur = sys.step(&cur, 1);
        let t = v.norm();
        total += t;
        if n + 10 > n_trunc {
            recent = recent.max(t);
            ratios.push(t / prev);
        }
        prev = t;
    }
    let mut tail = tail_estimate(recent, &ratios, eps);
    let mut v = u.clone();
    let mut cur = x.clone();
    let bwd_w = (lambda_minus - eps).exp();
    let mut prev = u0;
    let (mut recent, mut ratios) = (0.0_f64, Vec::new());
    for n in 1..=n_trunc {
        cur = sys.step(&cur, -1);
        v = coc.evaluate_inverse(&sys.coords(&cur)) * v * bwd_w;
        let t = v.norm();
        total += t;
        if n + 10 > n_trunc {
            recent = recent.max(t);
            ratios.push(t / prev);
        }
        prev = t;
    }
    tail += tail_estimate(recent, &ratios, eps);
    if !(tail <= TAIL_TOLERANCE * u0) {
        return Err(Error::TailTooLarge { tail, leading: u0 });
    }
    Ok((total, tail))
}

/// Geometric tail from the last terms; the ratio is at most `e^{-ε}` for a
/// convergent series of this form, but the observed ratio is used when larger.
fn tail_estimate(recent: f64, ratios: &[f64], eps: f64) -> f64 {
    let r = ratios.iter().copied().fold((-eps).exp(), f64::max);
    if r >= 1.0 {
        f64::INFINITY
    } else {
        recent * r / (1.0 - r)
    }
}

/// `K_ε(x) ≤ ℓ`.
pub fn pesin_member(metric: &LyapunovMetricData, ell: f64) -> bool {
    metric.k_eps <= ell
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub index: i64,
    pub margin: f64,
}

/// Rows of inequality margins (log scale, non-negative when satisfied).
#[derive(Clone, Debug, Default)]
pub struct NormBoundsReport {
    pub rows: Vec<CheckRow>,
    pub truncation_tail: f64,
}

impl NormBoundsReport {
    pub fn worst(&self, check: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.check == check)
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn worst_overall(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst_overall() >= tol
    }

    fn push(&mut self, check: &'static str, index: i64, margin: f64) {
        self.rows.push(CheckRow { check, index, margin });
    }
}

pub const NORM_CHECKS: [&str; 5] = ["estAEi", "estAnorm", "estLnorm", "estK", "estMnorm"];

/// Check the Lyapunov-norm inequalities along `x_{-n_max} ..= x_{n_max}`.
///
/// Margins are logarithmic: `log(upper) − log(value)` and
/// `log(value) − log(lower)`.
pub fn verify_norm_bounds(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    eps: f64,
    n_max: usize,
    field: &SplittingField,
    n_trunc: usize,
    rng_seed: u64,
) -> Result<NormBoundsReport> {
    check_eps(eps)?;
    let nm = n_max as i64;
    let nt = n_trunc as i64;
    let window = OrbitWindow::new(coc, sys, x, -nm - nt, nm + nt, field)?;
    let metrics: Vec<LyapunovMetricData> = (-nm..=nm)
        .map(|i| window.metric(i, eps, n_trunc, false))
        .collect::<Result<_>>()?;
    let at = |n: i64| &metrics[(n + nm) as usize];
    // Restricted products A^n|E^i in block coordinates, n = -n_max ..= n_max.
    let restricted: Vec<Vec<DMatrix<f64>>> = (0..window.blocks[window.idx(0)].len())
        .map(|bi| window.restricted_products(bi, nm))
        .collect::<Result<_>>()?;
    let m0 = at(0);
    let d = coc.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut report = NormBoundsReport {
        truncation_tail: metrics.iter().map(|m| m.truncation_tail).fold(0.0, f64::max),
        ..Default::default()
    };
    let lambda_plus = m0.blocks.iter().map(|b| b.0).fold(f64::NEG_INFINITY, f64::max);
    let samples: Vec<DVector<f64>> = linalg::sphere_samples(d, 8);
    let random_matrices: Vec<DMatrix<f64>> = (0..4)
        .map(|_| DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();

    for n in -nm..=nm {
        let mn = at(n);
        let prod = coc.product(sys, x, n)?;
        let nf = n as f64;
        let slack = eps * nf.abs();
        // Vectors inside each Oseledets space at x, pushed forward by the
        // cocycle restricted to that space.
        for (bi, (lam, basis)) in m0.blocks.iter().enumerate() {
            let m = basis.ncols();
            let rp = &restricted[bi][(n + nm) as usize];
            for j in 0..m.min(3) {
                let mut c = DVector::<f64>::zeros(m);
                c[j] = 1.0;
                if m > 1 {
                    c[(j + 1) % m] += 0.5;
                }
                let image = rp * &c;
                let after = image.dot(&(&mn.block_grams[bi] * &image)).sqrt();
                let before = c.dot(&(&m0.block_grams[bi] * &c)).sqrt();
                let ratio = (after / before).ln();
                report.push("estAEi", n, ratio - (nf * lam - slack));
                report.push("estAEi", n, (nf * lam + slack) - ratio);
            }
        }
        if n >= 1 {
            let op = lyapunov_operator_norm(mn, &prod, m0).ln();
            report.push("estAnorm", n, op - (nf * lambda_plus - slack));
            report.push("estAnorm", n, (nf * lambda_plus + slack) - op);
        }
        for u in &samples {
            let v = mn.norm(u);
            report.push("estLnorm", n, v.ln());
            report.push("estLnorm", n, (mn.k_eps / v).ln());
        }
        let kr = (mn.k_eps / m0.k_eps).ln();
        report.push("estK", n, kr + slack);
        report.push("estK", n, slack - kr);
        for a in &random_matrices {
            let op = lyapunov_operator_norm(mn, a, m0);
            let plain = linalg::op_norm(a);
            report.push("estMnorm", n, (op * m0.k_eps / plain).ln());
            report.push("estMnorm", n, (mn.k_eps * plain / op).ln());
        }
    }
    Ok(report)
}

/// Cone parameters: `θ = e^{λ′ − λ + 4ε}`.
#[derive(Clone, Copy, Debug)]
pub struct ConeSpec {
    pub lambda: f64,
    pub lambda_second: f64,
    pub eps: f64,
    pub theta: f64,
}

impl ConeSpec {
    pub fn new(spectrum: &SpectrumEstimate, eps: f64) -> Result<Self> {
        let second = spectrum.lambda_second.ok_or(Error::NoSplitting)?;
        let lambda = spectrum.groups.last().expect("nonempty").value;
        Self::from_exponents(lambda, second, eps)
    }

    /// `u ∈ K` (`‖u₂‖ ≤ ‖u₁‖`), or `u ∈ K^θ` when `narrowed`.
    pub fn contains(&self, metric: &LyapunovMetricData, u: &DVector<f64>, narrowed: bool) -> bool {
        let bound = if narrowed { self.theta } else { 1.0 };
        metric.cone_ratio(u) <= bound
    }

    pub fn from_exponents(lambda: f64, lambda_second: f64, eps: f64) -> Result<Self> {
        let theta = (lambda_second - lambda + 4.0 * eps).exp();
        if !(theta < 1.0) {
            return Err(Error::HypothesisViolated(format!(
                "eps = {eps} must be below (λ − λ′)/4 = {}",
                (lambda - lambda_second) / 4.0
            )));
        }
        Ok(ConeSpec {
            lambda,
            lambda_second,
            eps,
            theta,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConeReport {
    /// `check` is `cone`, `expansion` or `final`; `index` is `i`.
    pub rows: Vec<CheckRow>,
    pub failure_fraction: f64,
    pub final_inclusion_fraction: f64,
}

impl ConeReport {
    pub fn worst(&self, check: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.check == check)
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Verify `A_{p_i}(K_i) ⊂ K_{i+1}^θ` and `‖(A_{p_i} u)₁‖_{i+1} ≥ e^{λ−2ε} ‖u₁‖_i`
/// for `samples` vectors of each cone `K_i`, in the Lyapunov norms at
/// `x_i = f^i x`, and the final inclusion `K_k^θ ⊂ K_0`.
pub fn cone_check(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    p: &Point,
    k: u64,
    cones: &ConeSpec,
    field: &SplittingField,
    samples: usize,
    n_trunc: usize,
) -> Result<ConeReport> {
    if field.group_count() < 2 {
        return Err(Error::NoSplitting);
    }
    if k == 0 {
        return Err(Error::BadPeriod);
    }
    let metrics = metrics_along(coc, sys, x, cones.eps, field, n_trunc, 0, k as i64, false)?;
    let d = coc.dim;
    let dirs = linalg::sphere_samples(d, samples.max(1));
    let split_dim = |m: &LyapunovMetricData| m.blocks.last().unwrap().1.ncols();
    // Lyapunov-orthonormal coordinates: top block first, then the rest.
    let frame = |m: &LyapunovMetricData| {
        let nb = m.normalized_blocks();
        let top = nb.last().unwrap().clone();
        let rest: Vec<DVector<f64>> = nb[..nb.len() - 1]
            .iter()
            .flat_map(|b| b.column_iter().map(|c| c.clone_owned()).collect::<Vec<_>>())
            .collect();
        (top, rest)
    };
    let cone_vector = |m: &LyapunovMetricData, dir: &DVector<f64>, ratio: f64| -> Option<(DVector<f64>, f64)> {
        let m1 = split_dim(m);
        let (top, rest) = frame(m);
        let a = dir.rows(0, m1).clone_owned();
        let mut b = dir.rows(m1, d - m1).clone_owned();
        let (na, nb) = (a.norm(), b.norm());
        if na < 1e-12 {
            return None;
        }
        if nb > ratio * na {
            b *= ratio * na / nb;
        }
        let mut u = &top * &a;
        for (j, col) in rest.iter().enumerate() {
            u += col * b[j];
        }
        Some((u, na))
    };

    let mut report = ConeReport::default();
    let (mut total, mut failures) = (0usize, 0usize);
    let mut cur_p = p.clone();
    let expansion = (cones.lambda - 2.0 * cones.eps).exp();
    for i in 0..k as usize {
        let a = coc.evaluate(&sys.coords(&cur_p));
        let (mi, mnext) = (&metrics[i], &metrics[i + 1]);
        for dir in &dirs {
            let Some((u, u1)) = cone_vector(mi, dir, 1.0) else { continue };
            let w = &a * u;
            let (w1, w2) = mnext.split_norms(&w);
            let cone_margin = if w2 == 0.0 { f64::INFINITY } else { (cones.theta * w1 / w2).ln() };
            let exp_margin = (w1 / (expansion * u1)).ln();
            report.rows.push(CheckRow {
                check: "cone",
                index: i as i64,
                margin: cone_margin,
            });
            report.rows.push(CheckRow {
                check: "expansion",
                index: i as i64,
                margin: exp_margin,
            });
            total += 1;
            if cone_margin < 0.0 || exp_margin < 0.0 {
                failures += 1;
            }
        }
        cur_p = sys.step(&cur_p, 1);
    }
    let (mk, m0) = (&metrics[k as usize], &metrics[0]);
    let (mut inside, mut tried) = (0usize, 0usize);
    for dir in &dirs {
        let Some((u, _)) = cone_vector(mk, dir, cones.theta) else { continue };
        let (u1, u2) = m0.split_norms(&u);
        let margin = if u2 == 0.0 { f64::INFINITY } else { (u1 / u2).ln() };
        report.rows.push(CheckRow {
            check: "final",
            index: k as i64,
            margin,
        });
        tried += 1;
        if margin >= 0.0 {
            inside += 1;
        }
    }
    report.failure_fraction = failures as f64 / total.max(1) as f64;
    report.final_inclusion_fraction = inside as f64 / tried.max(1) as f64;
    Ok(report)
}

/// Parameters of the drift bound.
#[derive(Clone, Copy, Debug)]
pub struct DriftParams {
    pub ell: f64,
    pub eps: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

#[derive(Clone, Debug)]
pub struct DriftBoundCheck {
    pub k: u64,
    pub ell: f64,
    /// `max_i dist(x_i, p_i) e^{γ min(i, k−i)}`.
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Smallest `c ≥ 0` making both bounds hold for all `i`.
    pub c_est: f64,
    /// Constant each `i` needs on its own (max over both bounds).
    pub required: Vec<f64>,
    pub pass: Vec<bool>,
}

impl DriftBoundCheck {
    pub fn all_pass(&self) -> bool {
        self.c_est.is_finite() && self.pass.iter().all(|&b| b)
    }
}

/// Fit the constant `c` in
/// `‖A^i_p‖ ≤ ℓ e^{cℓδ^α} e^{i(λ₊+ε)}` and
/// `‖(A^i_p)⁻¹‖ ≤ ℓ e^{ε min(i,k−i)} e^{cℓδ^α} e^{i(−λ₋+ε)}` for `i = 0..=k`.
pub fn drift_bound(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    p: &Point,
    k: u64,
    params: &DriftParams,
) -> Result<DriftBoundCheck> {
    let DriftParams {
        ell,
        eps,
        alpha,
        gamma,
        lambda_plus,
        lambda_minus,
    } = *params;
    if eps >= gamma * alpha {
        return Err(Error::HypothesisViolated(format!(
            "eps = {eps} must be below gamma * alpha = {}",
            gamma * alpha
        )));
    }
    let mut dists = Vec::with_capacity(k as usize + 1);
    let (mut xi, mut pi) = (x.clone(), p.clone());
    let mut fwd = ScaledMatrix::identity(coc.dim);
    let mut inv = ScaledMatrix::identity(coc.dim);
    let mut excess = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        dists.push(sys.dist(&xi, &pi));
        let fi = i as f64;
        let m = i.min(k - i) as f64;
        let e1 = fwd.log_norm() - ell.ln() - fi * (lambda_plus + eps);
        let e2 = inv.log_norm() - ell.ln() - eps * m - fi * (-lambda_minus + eps);
        excess.push(e1.max(e2));
        if i < k {
            let c = sys.coords(&pi);
            coc.apply_left(&c, &mut fwd.mat);
            coc.apply_inverse_right(&c, &mut inv.mat);
            fwd.renormalize();
            inv.renormalize();
            xi = sys.step(&xi, 1);
            pi = sys.step(&pi, 1);
        }
    }
    let delta = shadow_delta(&dists, gamma);
    let scale = ell * delta.powf(alpha);
    let required: Vec<f64> = excess
        .iter()
        .map(|&e| {
            if e <= 0.0 {
                0.0
            } else if scale > 0.0 {
                e / scale
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let c_est = required.iter().copied().fold(0.0, f64::max);
    let pass = required.iter().map(|&r| r <= c_est && c_est.is_finite()).collect();
    Ok(DriftBoundCheck {
        k,
        ell,
        delta,
        alpha,
        gamma,
        c_est,
        required,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag_field(l1: f64, l2: f64) -> SplittingField {
        SplittingField::Fixed(vec![
            (l2.min(l1), DMatrix::from_column_slice(2, 1, if l2 < l1 { &[0.0, 1.0] } else { &[1.0, 0.0] })),
            (l1.max(l2), DMatrix::from_column_slice(2, 1, if l2 < l1 { &[1.0, 0.0] } else { &[0.0, 1.0] })),
        ])
    }

    #[test]
    fn closed_form_gram() {
        let sys = BaseSystem::cat_map();
        let c = CocycleSpec::diagonal(&[2.0, 0.5]).unwrap();
        let x = sys.point(&[0.3, 0.6]);
        let field = diag_field(2f64.ln(), -(2f64.ln()));
        let m = lyapunov_gram(&c, &sys, &x, 2f64.ln(), &field, 200).unwrap();
        assert_relative_eq!(m.gram, DMatrix::identity(2, 2) * 6.0, epsilon = 1e-9);
        assert_relative_eq!(m.k_eps, 6f64.sqrt(), epsilon = 1e-9);
        assert!(pesin_member(&m, 3.0));
        assert!(!pesin_member(&m, 2.0));
        // Large eps leaves only the n = 0 term.
        let m = lyapunov_gram(&c, &sys, &x, 60.0, &field, 10).unwrap();
        assert_relative_eq!(m.gram, DMatrix::identity(2, 2) * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn crude_norm_closed_forms() {
        let sys = BaseSystem::cat_map();
        let x = sys.point(&[0.3, 0.6]);
        let l2 = 2f64.ln();
        let scalar = CocycleSpec::constant(DMatrix::from_element(1, 1, 2.0)).unwrap();
        let (v, _) = lyapunov_norm_pm(&scalar, &sys, &x, &DVector::from_element(1, 1.0), l2, l2, l2, 200).unwrap();
        assert_relative_eq!(v, 3.0, epsilon = 1e-9);
        let id = CocycleSpec::identity(2);
        let u = DVector::from_vec(vec![0.6, 0.8]);
        let (v, _) = lyapunov_norm_pm(&id, &sys, &x, &u, l2, 0.0, 0.0, 200).unwrap();
        assert_relative_eq!(v, 3.0, epsilon = 1e-9);
        let (z, _) = lyapunov_norm_pm(&id, &sys, &x, &DVector::zeros(2), l2, 0.0, 0.0, 200).unwrap();
        assert_eq!(z, 0.0);
        assert!(matches!(
            lyapunov_norm_pm(&id, &sys, &x, &u, 0.01, 0.0, 0.0, 50),
            Err(Error::TailTooLarge { .. })
        ));
    }

    #[test]
    fn norm_bounds_hold_for_diagonal_and_fail_when_swapped() {
        let sys = BaseSystem::cat_map();
        let c = CocycleSpec::diagonal(&[2.0, 0.5]).unwrap();
        let x = sys.point(&[0.3, 0.6]);
        let field = diag_field(2f64.ln(), -(2f64.ln()));
        let r = verify_norm_bounds(&c, &sys, &x, 0.1, 10, &field, 400, 1).unwrap();
        assert!(r.passes(-1e-6), "worst {}", r.worst_overall());
        let bad = verify_norm_bounds(&c, &sys, &x, 0.1, 10, &field.swapped(), 400, 1).unwrap();
        assert!(bad.worst("estAEi") < -1.0);
    }

    #[test]
    fn cone_image_of_diagonal() {
        let sys = BaseSystem::cat_map();
        let c = CocycleSpec::diagonal(&[2.0, 0.5]).unwrap();
        let p = sys.point(&[0.0, 0.0]);
        let field = diag_field(2f64.ln(), -(2f64.ln()));
        let cones = ConeSpec::from_exponents(2f64.ln(), -(2f64.ln()), 0.1).unwrap();
        let r = cone_check(&c, &sys, &p, &p, 3, &cones, &field, 16, 400).unwrap();
        assert_eq!(r.failure_fraction, 0.0);
        assert_eq!(r.final_inclusion_fraction, 1.0);
        // u = (1, 1) maps to ratio 1/4 against θ = e^{-2 ln 2 + 0.4}.
        assert_relative_eq!(r.worst("cone"), 0.4, epsilon = 1e-9);
        assert!(ConeSpec::from_exponents(0.1, 0.0, 0.1).is_err());
    }

    #[test]
    fn drift_bound_cases() {
        let sys = BaseSystem::cat_map();
        let id = CocycleSpec::identity(2);
        let x = sys.point(&[0.3, 0.6]);
        let params = DriftParams {
            ell: 2.0,
            eps: 0.1,
            alpha: 1.0,
            gamma: 0.8,
            lambda_plus: 0.0,
            lambda_minus: 0.0,
        };
        let r = drift_bound(&id, &sys, &x, &x, 10, &params).unwrap();
        assert_eq!(r.c_est, 0.0);
        assert!(r.all_pass());
        let bad = DriftParams { eps: 0.9, ..params };
        assert!(matches!(
            drift_bound(&id, &sys, &x, &x, 10, &bad),
            Err(Error::HypothesisViolated(_))
        ));
    }
}
