//! Lyapunov exponent estimation: QR spectra, norm exponents, periodic
//! exponents, subadditive traces, good times and a numerical Oseledets
//! splitting.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::base::{BaseSystem, Point};
use crate::cocycle::CocycleSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, ScaledMatrix};

/// Distinct Lyapunov value with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentGroup {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectrumEstimate {
    /// Ascending, with multiplicity.
    pub exponents: Vec<f64>,
    pub n_steps: usize,
    pub seeds: Vec<Point>,
    /// Sorted exponents from each seed.
    pub per_seed: Vec<Vec<f64>>,
    pub per_seed_spread: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub lambda_second: Option<f64>,
    /// Birkhoff average of `log |det A|` over the same orbits.
    pub log_det_average: f64,
    /// Ascending distinct values.
    pub groups: Vec<ExponentGroup>,
}

impl SpectrumEstimate {
    fn from_seeds(per_seed: Vec<Vec<f64>>, log_dets: &[f64], n_steps: usize, seeds: Vec<Point>) -> Self {
        let d = per_seed[0].len();
        let m = per_seed.len() as f64;
        let exponents: Vec<f64> = (0..d).map(|i| per_seed.iter().map(|s| s[i]).sum::<f64>() / m).collect();
        let per_seed_spread = (0..d)
            .map(|i| {
                let (lo, hi) = per_seed
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[i]), hi.max(s[i])));
                hi - lo
            })
            .fold(0.0, f64::max);
        let groups = group_exponents(&exponents, (5.0 * per_seed_spread).max(1e-8));
        let lambda_second = (groups.len() > 1).then(|| groups[groups.len() - 2].value);
        SpectrumEstimate {
            lambda_plus: exponents[d - 1],
            lambda_minus: exponents[0],
            exponents,
            n_steps,
            seeds,
            per_seed,
            per_seed_spread,
            lambda_second,
            log_det_average: log_dets.iter().sum::<f64>() / log_dets.len() as f64,
            groups,
        }
    }
}

/// Merge ascending values whose consecutive gaps are within `tol`.
pub fn group_exponents(sorted: &[f64], tol: f64) -> Vec<ExponentGroup> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &v in sorted {
        match out.last_mut() {
            Some((sum, count)) if v - last <= tol => {
                *sum += v;
                *count += 1;
            }
            _ => out.push((v, 1)),
        }
        last = v;
    }
    out.into_iter()
        .map(|(sum, multiplicity)| ExponentGroup {
            value: sum / multiplicity as f64,
            multiplicity,
        })
        .collect()
}

/// Starting points: `x` followed by `seeds - 1` canonical-measure samples.
pub fn seed_points(sys: &BaseSystem, x: &Point, seeds: usize, rng_seed: u64, horizon: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    std::iter::once(x.clone())
        .chain((1..seeds.max(1)).map(|_| sys.random_point(&mut rng, horizon)))
        .collect()
}

/// Full spectrum by QR re-orthonormalization along `seeds` orbits of
/// length `n`.
pub fn qr_spectrum(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    n: usize,
    seeds: usize,
    rng_seed: u64,
) -> Result<SpectrumEstimate> {
    if n < 1 || seeds < 1 {
        return Err(Error::Config("qr_spectrum needs n ≥ 1 and seeds ≥ 1".into()));
    }
    let starts = seed_points(sys, x, seeds, rng_seed, n);
    let d = coc.dim;
    let mut per_seed = Vec::with_capacity(starts.len());
    let mut log_dets = Vec::with_capacity(starts.len());
    for start in &starts {
        let mut q = DMatrix::<f64>::identity(d, d);
        let mut sums = vec![0.0; d];
        let mut log_det = 0.0;
        let mut cur = start.clone();
        for step in 0..n {
            let c = sys.coords(&cur);
            log_det += linalg::determinant(&coc.evaluate(&c)).abs().ln();
            coc.apply_left(&c, &mut q);
            let (qn, r) = linalg::qr_positive(q);
            for (i, s) in sums.iter_mut().enumerate() {
                let rii = r[(i, i)];
                if !(rii > 0.0) || !rii.is_finite() {
                    return Err(Error::DegenerateOrbit { step });
                }
                *s += rii.ln();
            }
            q = qn;
            cur = sys.step(&cur, 1);
        }
        let mut lam: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
        lam.sort_by(|a, b| a.total_cmp(b));
        per_seed.push(lam);
        log_dets.push(log_det / n as f64);
    }
    Ok(SpectrumEstimate::from_seeds(per_seed, &log_dets, n, starts))
}

/// `(λ₊, λ₋)` as `a_n / n` and `-ã_n / n`, from renormalized products of
/// `A` and of the inverses.
pub fn norm_exponents(coc: &CocycleSpec, sys: &BaseSystem, x: &Point, n: usize) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::Config("norm_exponents needs n ≥ 1".into()));
    }
    let d = coc.dim;
    let mut fwd = ScaledMatrix::identity(d);
    let mut inv = ScaledMatrix::identity(d);
    let mut cur = x.clone();
    for step in 0..n {
        let c = sys.coords(&cur);
        coc.apply_left(&c, &mut fwd.mat);
        coc.apply_inverse_right(&c, &mut inv.mat);
        fwd.renormalize();
        inv.renormalize();
        if !fwd.log_scale.is_finite() || !inv.log_scale.is_finite() {
            return Err(Error::DegenerateOrbit { step });
        }
        cur = sys.step(&cur, 1);
    }
    Ok((fwd.log_norm() / n as f64, -inv.log_norm() / n as f64))
}

/// Exponents of `A` at a periodic point.
#[derive(Clone, Debug)]
pub struct PeriodicExponents {
    pub k: u64,
    /// `k⁻¹ log |eigenvalue|` of `A^k_p`, ascending with multiplicity.
    pub spectrum: Vec<f64>,
    /// `k⁻¹ log ‖A^k_p‖`.
    pub norm_plus: f64,
    /// `-k⁻¹ log ‖(A^k_p)⁻¹‖`.
    pub norm_minus: f64,
}

impl PeriodicExponents {
    /// `k⁻¹ log ρ(A^k_p)`.
    pub fn spectral_radius(&self) -> f64 {
        *self.spectrum.last().expect("nonempty spectrum")
    }
}

/// Periodicity tolerance for `periodic_exponents`.
pub const PERIODIC_TOLERANCE: f64 = 1e-8;

/// Spectrum and norm rates of `A^k_p`.
///
/// Products are renormalized at every step. Eigenvalue moduli are taken from
/// the spectral radii of the compound products `∧^i A^k_p` for `d ≤ 6`, so
/// every modulus is read at the scale where it dominates; for triangular
/// factors the diagonal is accumulated in log space; otherwise moduli come
/// from the forward product (upper half) and the inverse product (lower half).
pub fn periodic_exponents(coc: &CocycleSpec, sys: &BaseSystem, p: &Point, k: u64) -> Result<PeriodicExponents> {
    if k == 0 {
        return Err(Error::BadPeriod);
    }
    let defect = sys.dist(&sys.step(p, k as i64), p);
    if defect > PERIODIC_TOLERANCE {
        return Err(Error::NotPeriodic { k, defect });
    }
    let d = coc.dim;
    let coords = sys.orbit_coords(p, k as usize);
    let mut fwd = ScaledMatrix::identity(d);
    let mut inv = ScaledMatrix::identity(d);
    let mut triangular = true;
    let mut log_diag = vec![0.0; d];
    for c in &coords {
        let a = coc.evaluate(c);
        triangular &= (0..d).all(|i| (i + 1..d).all(|j| a[(i, j)] == 0.0));
        for (i, v) in log_diag.iter_mut().enumerate() {
            *v += a[(i, i)].abs().ln();
        }
        coc.apply_left(c, &mut fwd.mat);
        coc.apply_inverse_right(c, &mut inv.mat);
        fwd.renormalize();
        inv.renormalize();
    }
    let kf = k as f64;
    let mut spectrum: Vec<f64> = if triangular {
        log_diag
    } else if d <= 6 {
        compound_moduli(coc, &coords)
    } else {
        split_moduli(&fwd, &inv)
    };
    for v in &mut spectrum {
        *v /= kf;
    }
    spectrum.sort_by(|a, b| a.total_cmp(b));
    Ok(PeriodicExponents {
        k,
        spectrum,
        norm_plus: fwd.log_norm() / kf,
        norm_minus: -inv.log_norm() / kf,
    })
}

fn log_spectral_radius(m: &ScaledMatrix) -> f64 {
    linalg::log_eig_moduli(&m.mat).last().copied().unwrap_or(f64::NEG_INFINITY) + m.log_scale
}

/// `log|μ_i|` (unsorted) from `log ρ(∧^i P) - log ρ(∧^{i-1} P)`.
fn compound_moduli(coc: &CocycleSpec, coords: &[Vec<f64>]) -> Vec<f64> {
    let d = coc.dim;
    let mut radii = vec![0.0; d + 1];
    for (i, r) in radii.iter_mut().enumerate().skip(1) {
        let mut prod = ScaledMatrix::identity(linalg::binomial(d, i));
        for c in coords {
            let a = coc.evaluate(c);
            let w = if i == 1 { a } else { linalg::compound(&a, i) };
            prod.mat = w * &prod.mat;
            prod.renormalize();
        }
        *r = log_spectral_radius(&prod);
    }
    (1..=d).map(|i| radii[i] - radii[i - 1]).collect()
}

/// Upper moduli from the forward product, lower ones from the inverse.
fn split_moduli(fwd: &ScaledMatrix, inv: &ScaledMatrix) -> Vec<f64> {
    let a: Vec<f64> = linalg::log_eig_moduli(&fwd.mat).iter().map(|v| v + fwd.log_scale).collect();
    let mut b: Vec<f64> = linalg::log_eig_moduli(&inv.mat)
        .iter()
        .map(|v| -(v + inv.log_scale))
        .collect();
    b.sort_by(|x, y| x.total_cmp(y));
    let (amax, bmin) = (a[a.len() - 1], b[0]);
    a.iter()
        .zip(&b)
        .map(|(&ai, &bi)| if amax - ai <= bi - bmin { ai } else { bi })
        .collect()
}

/// A real subadditive sequence over one base orbit, with access to the
/// shifted tails `a_{n-i}(f^i x)`.
pub trait Subadditive {
    /// Largest `n` available.
    fn horizon(&self) -> usize;
    /// `a_n(x)`.
    fn value(&self, n: usize) -> f64;
    /// `a_{n-i}(f^i x)` for `i = 0..=n`.
    fn tails(&self, n: usize) -> Vec<f64>;
}

/// Log-norm sequences `a_n = log ‖A^n_x‖` and `ã_n = log ‖(A^n_x)⁻¹‖`.
#[derive(Clone, Debug)]
pub struct SubadditiveTrace {
    coc: CocycleSpec,
    coords: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub a_tilde: Vec<f64>,
    pub nu_a: f64,
    pub nu_a_tilde: f64,
    /// `min_{1≤n≤N} a_n / n`.
    pub inf_ratio: f64,
}

impl SubadditiveTrace {
    pub fn len(&self) -> usize {
        self.a.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm_series(&self) -> TraceSeries<'_> {
        TraceSeries {
            trace: self,
            inverse: false,
        }
    }

    pub fn inverse_series(&self) -> TraceSeries<'_> {
        TraceSeries {
            trace: self,
            inverse: true,
        }
    }
}

/// One of the two sequences of a [`SubadditiveTrace`].
#[derive(Clone, Copy, Debug)]
pub struct TraceSeries<'a> {
    trace: &'a SubadditiveTrace,
    inverse: bool,
}

impl Subadditive for TraceSeries<'_> {
    fn horizon(&self) -> usize {
        self.trace.len()
    }

    fn value(&self, n: usize) -> f64 {
        if self.inverse {
            self.trace.a_tilde[n]
        } else {
            self.trace.a[n]
        }
    }

    fn tails(&self, n: usize) -> Vec<f64> {
        let t = self.trace;
        let d = t.coc.dim;
        let mut out = vec![0.0; n + 1];
        let mut m = ScaledMatrix::identity(d);
        // Extend the product A(x_{n-1}) ⋯ A(x_i) (or its inverse) by one
        // factor on the start side as i decreases.
        for i in (0..n).rev() {
            let c = &t.coords[i];
            if self.inverse {
                m.mat = t.coc.evaluate_inverse(c) * &m.mat;
            } else {
                m.mat = &m.mat * t.coc.evaluate(c);
            }
            m.renormalize();
            out[i] = m.log_norm();
        }
        out
    }
}

/// Both log-norm sequences along the orbit of `x` up to `n_max`.
pub fn subadditive_trace(coc: &CocycleSpec, sys: &BaseSystem, x: &Point, n_max: usize) -> Result<SubadditiveTrace> {
    if n_max == 0 {
        return Err(Error::Config("subadditive_trace needs N ≥ 1".into()));
    }
    let coords = sys.orbit_coords(x, n_max);
    let d = coc.dim;
    let mut fwd = ScaledMatrix::identity(d);
    let mut inv = ScaledMatrix::identity(d);
    let mut a = Vec::with_capacity(n_max + 1);
    let mut a_tilde = Vec::with_capacity(n_max + 1);
    a.push(0.0);
    a_tilde.push(0.0);
    for (step, c) in coords.iter().enumerate() {
        coc.apply_left(c, &mut fwd.mat);
        coc.apply_inverse_right(c, &mut inv.mat);
        fwd.renormalize();
        inv.renormalize();
        if !fwd.log_scale.is_finite() || !inv.log_scale.is_finite() {
            return Err(Error::DegenerateOrbit { step });
        }
        a.push(fwd.log_norm());
        a_tilde.push(inv.log_norm());
    }
    let n = n_max as f64;
    let inf_ratio = (1..=n_max).map(|k| a[k] / k as f64).fold(f64::INFINITY, f64::min);
    Ok(SubadditiveTrace {
        coc: coc.clone(),
        coords,
        nu_a: a[n_max] / n,
        nu_a_tilde: a_tilde[n_max] / n,
        a,
        a_tilde,
        inf_ratio,
    })
}

#[derive(Clone, Debug)]
pub struct GoodTimes {
    /// Ascending members of `S ⊂ [L, N]`.
    pub members: Vec<usize>,
    /// `|S ∩ [1, N]| / N`.
    pub density: f64,
    /// For each `n ≤ N`, the largest `i ≤ n` at which the inequality fails
    /// for some sequence (0 when none fails).
    pub last_violation: Vec<usize>,
    /// Smallest `L` for which the good-time set is nonempty.
    pub min_l: Option<usize>,
    pub horizon: usize,
}

impl GoodTimes {
    /// Members of the good-time set for another threshold `L`.
    pub fn with_l(&self, l: usize) -> Vec<usize> {
        (l.max(1)..=self.horizon)
            .filter(|&n| self.last_violation[n] < l)
            .collect()
    }
}

/// Slack below which `a_n − a_{n−i}(f^i x) ≥ (λ−ε) i` counts as satisfied.
pub const GOOD_TIME_SLACK: f64 = 1e-9;

/// All `n ∈ [L, N]` with `a_n(x) − a_{n−i}(f^i x) ≥ (λ_j − ε) i` for every
/// `L ≤ i ≤ n` and every sequence `j`, by an O(N²) scan.
pub fn good_times(series: &[&dyn Subadditive], lambdas: &[f64], eps: f64, l: usize) -> Result<GoodTimes> {
    if series.is_empty() || series.len() != lambdas.len() {
        return Err(Error::Config("good_times needs one lambda per sequence".into()));
    }
    if !(eps > 0.0) || l == 0 {
        return Err(Error::Config("good_times needs eps > 0 and L ≥ 1".into()));
    }
    let horizon = series.iter().map(|s| s.horizon()).min().unwrap_or(0);
    let mut last_violation = vec![0usize; horizon + 1];
    for (s, &lam) in series.iter().zip(lambdas) {
        for n in 1..=horizon {
            let an = s.value(n);
            let tails = s.tails(n);
            if let Some(i) = (1..=n)
                .rev()
                .find(|&i| an - tails[i] < (lam - eps) * i as f64 - GOOD_TIME_SLACK)
            {
                last_violation[n] = last_violation[n].max(i);
            }
        }
    }
    let members: Vec<usize> = (l..=horizon).filter(|&n| last_violation[n] < l).collect();
    let min_l = (1..=horizon)
        .filter(|&n| last_violation[n] < n)
        .map(|n| last_violation[n] + 1)
        .min();
    Ok(GoodTimes {
        density: members.len() as f64 / horizon.max(1) as f64,
        members,
        last_violation,
        min_l,
        horizon,
    })
}

#[derive(Clone, Debug)]
pub struct OseledetsSplitting {
    pub x: Point,
    /// `(λ_i, orthonormal basis of E^i_x)`, ascending in `λ_i`.
    pub subspaces: Vec<(f64, DMatrix<f64>)>,
    pub n_used: usize,
}

impl OseledetsSplitting {
    pub fn dim(&self) -> usize {
        self.subspaces.first().map_or(0, |(_, b)| b.nrows())
    }

    /// Columns of all bases, slowest subspace first.
    pub fn basis(&self) -> DMatrix<f64> {
        let d = self.dim();
        let cols: Vec<_> = self
            .subspaces
            .iter()
            .flat_map(|(_, b)| b.column_iter().map(|c| c.clone_owned()))
            .collect();
        DMatrix::from_columns(&cols).resize(d, d, 0.0)
    }

    /// Smallest principal angle between distinct subspaces.
    pub fn min_angle(&self) -> f64 {
        let mut best = std::f64::consts::FRAC_PI_2;
        for i in 0..self.subspaces.len() {
            for j in i + 1..self.subspaces.len() {
                let c = (self.subspaces[i].1.transpose() * &self.subspaces[j].1)
                    .singular_values()
                    .max()
                    .min(1.0);
                best = best.min(c.acos());
            }
        }
        best
    }
}

/// Oseledets subspaces at `x` from the slow filtration (bottom right singular
/// vectors of `A^n_x`) intersected with the fast filtration (bottom right
/// singular vectors of `A^{-n}_x`). Groups come from `spectrum`.
pub fn oseledets_splitting(
    coc: &CocycleSpec,
    sys: &BaseSystem,
    x: &Point,
    n: usize,
    spectrum: &SpectrumEstimate,
) -> Result<OseledetsSplitting> {
    let groups = &spectrum.groups;
    if groups.len() < 2 {
        return Err(Error::ClusterError("a single exponent group".into()));
    }
    let min_gap = groups.windows(2).map(|w| w[1].value - w[0].value).fold(f64::INFINITY, f64::min);
    if min_gap <= 10.0 * spectrum.per_seed_spread {
        return Err(Error::ClusterError(format!(
            "gap {min_gap:e} below 10x seed spread {:e}",
            spectrum.per_seed_spread
        )));
    }
    let width = groups[groups.len() - 1].value - groups[0].value;
    let n_used = n.min((32.0 / width).floor() as usize).max(1);
    let d = coc.dim;
    let fwd = coc.product(sys, x, n_used as i64)?;
    let bwd = coc.product(sys, x, -(n_used as i64))?;
    let slow = right_singular_ascending(&fwd);
    let fast = right_singular_ascending(&bwd);
    let mut subspaces = Vec::with_capacity(groups.len());
    let mut below = 0;
    for g in groups {
        let above = d - below - g.multiplicity;
        // Slow filtration: exponents ≤ λ_i has dimension below + d_i.
        let f = slow.columns(0, below + g.multiplicity).clone_owned();
        // Fast filtration: exponents ≥ λ_i has dimension d_i + above.
        let b = fast.columns(0, g.multiplicity + above).clone_owned();
        subspaces.push((g.value, linalg::intersect_spans(&f, &b, g.multiplicity)));
        below += g.multiplicity;
    }
    Ok(OseledetsSplitting {
        x: x.clone(),
        subspaces,
        n_used,
    })
}

/// Right singular vectors as columns, by ascending singular value.
fn right_singular_ascending(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    DMatrix::from_fn(m.ncols(), order.len(), |r, c| vt[(order[c], r)])
}
