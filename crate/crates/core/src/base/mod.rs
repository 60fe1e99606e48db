//! Hyperbolic base systems: toral automorphisms and the full shift.
//!
//! Toral orbits are computed in exact rational arithmetic (see [`torus`]), so
//! periodic points found by enumeration or closing satisfy `f^k p = p`
//! exactly. Shift points share their symbol storage along orbits.

pub mod intmat;
pub mod shift;
pub mod torus;

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
pub use intmat::IntMatrix;
pub use shift::ShiftPoint;
pub use torus::TorusPoint;

/// Default cap on the number of periodic points `enumerate_periodic` produces.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Default lower cutoff on `min(i, k - i)` for the shadowing slope fit.
pub const DEFAULT_FIT_CUTOFF: u64 = 2;

#[derive(Clone, Debug)]
pub enum Point {
    Torus(TorusPoint),
    Shift(ShiftPoint),
}

impl Point {
    pub fn as_torus(&self) -> Option<&TorusPoint> {
        match self {
            Point::Torus(p) => Some(p),
            Point::Shift(_) => None,
        }
    }

    pub fn as_shift(&self) -> Option<&ShiftPoint> {
        match self {
            Point::Shift(p) => Some(p),
            Point::Torus(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Toral {
        matrix: IntMatrix,
        forward: Vec<i64>,
        backward: Vec<i64>,
    },
    Shift {
        alphabet: u32,
    },
}

/// An invertible hyperbolic base map with its metric.
#[derive(Clone, Debug)]
pub struct BaseSystem {
    kind: Kind,
    gamma_hyp: f64,
    pub enumeration_cap: u128,
}

/// Result of closing an almost-returning orbit segment.
#[derive(Clone, Debug)]
pub struct ShadowReport {
    pub p: Point,
    pub k: u64,
    /// `dist(f^i x, f^i p)` for `i = 0..=k`.
    pub distances: Vec<f64>,
    /// Least-squares decay rate of the distances in `min(i, k - i)`.
    pub fitted_gamma: f64,
    /// `max_i dist_i · exp(fitted_gamma · min(i, k - i))`.
    pub delta: f64,
}

impl BaseSystem {
    /// Toral automorphism given by an integer matrix with `|det| = 1` and no
    /// eigenvalue on the unit circle.
    pub fn toral(rows: &[Vec<i64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Config("toral matrix must be square and nonempty".into()));
        }
        let matrix = IntMatrix::from_rows(rows);
        let det = matrix.det();
        if det.abs() != BigInt::one() {
            return Err(Error::Config(format!("toral matrix has determinant {det}, need ±1")));
        }
        let real = DMatrix::from_fn(d, d, |i, j| rows[i][j] as f64);
        let moduli: Vec<f64> = real.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        if moduli.iter().any(|m| (m - 1.0).abs() < 1e-9) {
            return Err(Error::Config("toral matrix has an eigenvalue of modulus 1".into()));
        }
        let gamma_hyp = moduli
            .iter()
            .filter(|&&m| m > 1.0)
            .fold(f64::INFINITY, |acc, &m| acc.min(m.ln()));
        let adj = matrix.adjugate();
        let sign = if det.is_positive() { 1 } else { -1 };
        let to_i64 = |m: &IntMatrix, s: i64| -> Result<Vec<i64>> {
            m.entries
                .iter()
                .map(|v| v.to_i64().map(|x| x * s))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Config("toral matrix entries too large".into()))
        };
        let forward = to_i64(&matrix, 1)?;
        let backward = to_i64(&adj, sign)?;
        Ok(BaseSystem {
            kind: Kind::Toral {
                matrix,
                forward,
                backward,
            },
            gamma_hyp,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// Arnold's cat map `[[2, 1], [1, 1]]`.
    pub fn cat_map() -> Self {
        BaseSystem::toral(&[vec![2, 1], vec![1, 1]]).expect("cat map is hyperbolic")
    }

    /// Two-sided full shift with metric `2^-m`.
    pub fn full_shift(alphabet: u32) -> Result<Self> {
        if !(2..=256).contains(&alphabet) {
            return Err(Error::Config("shift alphabet must be in 2..=256".into()));
        }
        Ok(BaseSystem {
            kind: Kind::Shift { alphabet },
            gamma_hyp: std::f64::consts::LN_2,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn gamma_hyp(&self) -> f64 {
        self.gamma_hyp
    }

    pub fn is_toral(&self) -> bool {
        matches!(self.kind, Kind::Toral { .. })
    }

    /// Dimension of the torus, or 0 for the shift.
    pub fn torus_dim(&self) -> usize {
        match &self.kind {
            Kind::Toral { matrix, .. } => matrix.dim,
            Kind::Shift { .. } => 0,
        }
    }

    pub fn alphabet(&self) -> Option<u32> {
        match &self.kind {
            Kind::Shift { alphabet } => Some(*alphabet),
            Kind::Toral { .. } => None,
        }
    }

    /// The toral matrix as floats (the derivative of the map).
    pub fn derivative(&self) -> Option<DMatrix<f64>> {
        match &self.kind {
            Kind::Toral { forward, matrix, .. } => {
                let d = matrix.dim;
                Some(DMatrix::from_fn(d, d, |i, j| forward[i * d + j] as f64))
            }
            Kind::Shift { .. } => None,
        }
    }

    /// Number of real coordinates cocycles read from a point.
    pub fn coord_dim(&self) -> usize {
        match &self.kind {
            Kind::Toral { matrix, .. } => matrix.dim,
            Kind::Shift { .. } => 2,
        }
    }

    pub fn coords(&self, x: &Point) -> Vec<f64> {
        match x {
            Point::Torus(t) => t.coords(),
            Point::Shift(s) => s.coords().to_vec(),
        }
    }

    pub fn is_valid(&self, x: &Point) -> bool {
        match (&self.kind, x) {
            (Kind::Toral { matrix, .. }, Point::Torus(t)) => t.dim() == matrix.dim,
            (Kind::Shift { alphabet }, Point::Shift(s)) => s.alphabet() == *alphabet,
            _ => false,
        }
    }

    /// Torus point from float coordinates (dyadic rounding at 2^-62).
    pub fn point(&self, coords: &[f64]) -> Point {
        Point::Torus(TorusPoint::from_coords(coords))
    }

    /// A point drawn from the canonical measure: Lebesgue for the torus,
    /// uniform Bernoulli for the shift. Shift points carry explicit random
    /// symbols on `[-horizon-64, horizon+64]`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, horizon: usize) -> Point {
        match &self.kind {
            Kind::Toral { matrix, .. } => {
                let den = 1u64 << torus::DYADIC_BITS;
                let nums: Vec<i64> = (0..matrix.dim).map(|_| rng.gen_range(0..den) as i64).collect();
                Point::Torus(TorusPoint::rational(&nums, den))
            }
            Kind::Shift { alphabet } => {
                let reach = horizon as i64 + 64;
                let window: Vec<u8> = (0..(2 * reach + 1))
                    .map(|_| rng.gen_range(0..*alphabet) as u8)
                    .collect();
                let core = vec![rng.gen_range(0..*alphabet) as u8];
                Point::Shift(ShiftPoint::new(*alphabet, window, -reach, core))
            }
        }
    }

    /// `f^n x`.
    pub fn step(&self, x: &Point, n: i64) -> Point {
        match (&self.kind, x) {
            (Kind::Toral { forward, backward, matrix }, Point::Torus(t)) => {
                let d = matrix.dim;
                let m = if n >= 0 { forward } else { backward };
                let steps = n.unsigned_abs();
                if steps <= 16 {
                    let mut cur = t.clone();
                    for _ in 0..steps {
                        cur = cur.apply_small(d, m);
                    }
                    Point::Torus(cur)
                } else if let Some(den) = t.denominator().to_u64() {
                    Point::Torus(t.apply_small(d, &matpow_mod(m, d, steps, den)))
                } else {
                    let rows: Vec<Vec<i64>> = m.chunks(d).map(|r| r.to_vec()).collect();
                    Point::Torus(t.apply_big(&IntMatrix::from_rows(&rows).pow(steps)))
                }
            }
            (Kind::Shift { .. }, Point::Shift(s)) => Point::Shift(s.shifted(n)),
            _ => panic!("point does not belong to this base system"),
        }
    }

    /// The forward orbit `x, f x, ..., f^n x`.
    pub fn orbit(&self, x: &Point, n: usize) -> Vec<Point> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(x.clone());
        for i in 0..n {
            let next = self.step(&out[i], 1);
            out.push(next);
        }
        out
    }

    /// Cocycle coordinates of `f^j x` for `j = 0..n` (n entries).
    pub fn orbit_coords(&self, x: &Point, n: usize) -> Vec<Vec<f64>> {
        let mut cur = x.clone();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.coords(&cur));
            cur = self.step(&cur, 1);
        }
        out
    }

    /// Toral: Euclidean distance minimized over integer translates.
    /// Shift: `2^-m` with `m` the smallest `|n|` where the symbols differ.
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        match (x, y) {
            (Point::Torus(a), Point::Torus(b)) => {
                if a.exact_eq(b) {
                    return 0.0;
                }
                a.coords()
                    .iter()
                    .zip(b.coords())
                    .map(|(u, v)| {
                        let w = u - v;
                        let w = w - w.round();
                        w * w
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            (Point::Shift(a), Point::Shift(b)) => match a.first_difference(b) {
                None => 0.0,
                Some(m) => 0.5f64.powi(m.min(2000) as i32),
            },
            _ => panic!("points from different base systems"),
        }
    }

    /// All `k` in `range` (ascending) with `dist(x, f^k x) < beta`, by a
    /// linear orbit scan.
    pub fn find_recurrence(&self, x: &Point, beta: f64, range: RangeInclusive<u64>) -> Vec<u64> {
        let (lo, hi) = (*range.start(), *range.end());
        if hi < lo.max(1) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cur = self.step(x, lo.max(1) as i64);
        for k in lo.max(1)..=hi {
            if self.dist(x, &cur) < beta {
                out.push(k);
            }
            if k < hi {
                cur = self.step(&cur, 1);
            }
        }
        out
    }

    /// Produce the period-`k` point shadowing the orbit segment `x, ..., f^k x`.
    ///
    /// Toral: lift `f^k x` to the representative nearest `x`, so the lift is
    /// `M^k x - m` for an integer vector `m`, and return `p = (M^k - I)^{-1} m`
    /// in exact rationals. Shift: the periodic repetition of `x_0 .. x_{k-1}`.
    pub fn close_orbit(&self, x: &Point, k: u64) -> Result<ShadowReport> {
        if k == 0 {
            return Err(Error::BadPeriod);
        }
        let p = match (&self.kind, x) {
            (Kind::Toral { matrix, .. }, Point::Torus(t)) => {
                let fk = match self.step(x, k as i64) {
                    Point::Torus(y) => y,
                    Point::Shift(_) => unreachable!(),
                };
                let w = t.wrapped_displacement(&fk).expect("orbit keeps the denominator");
                let den = BigInt::from(t.denominator());
                let nums = t.numerators();
                let mk = matrix.pow(k);
                let image = mk.mul_vec(&nums);
                let lift: Vec<BigInt> = image
                    .iter()
                    .zip(&nums)
                    .zip(&w)
                    .map(|((mx, x0), wi)| {
                        let (q, r) = (mx - x0 - wi).div_rem(&den);
                        debug_assert!(r.is_zero(), "lift must be integral");
                        q
                    })
                    .collect();
                let b = mk.sub_identity();
                let det = b.det();
                if det.is_zero() {
                    return Err(Error::SingularClose { k });
                }
                let mut pnum = b.adjugate().mul_vec(&lift);
                if det.is_negative() {
                    pnum.iter_mut().for_each(|v| *v = -v.clone());
                }
                let den_p: BigUint = det.abs().to_biguint().expect("positive");
                Point::Torus(TorusPoint::from_big(&pnum, &den_p))
            }
            (Kind::Shift { alphabet }, Point::Shift(s)) => {
                let word: Vec<u8> = (0..k as i64).map(|n| s.symbol(n)).collect();
                Point::Shift(ShiftPoint::periodic(*alphabet, word))
            }
            _ => panic!("point does not belong to this base system"),
        };
        let mut distances = Vec::with_capacity(k as usize + 1);
        let (mut xi, mut pi) = (x.clone(), p.clone());
        for i in 0..=k {
            distances.push(self.dist(&xi, &pi));
            if i < k {
                xi = self.step(&xi, 1);
                pi = self.step(&pi, 1);
            }
        }
        let fitted_gamma = fit_decay_rate(&distances, DEFAULT_FIT_CUTOFF);
        let delta = shadow_delta(&distances, if fitted_gamma.is_finite() { fitted_gamma } else { 0.0 });
        Ok(ShadowReport {
            p,
            k,
            distances,
            fitted_gamma,
            delta,
        })
    }

    /// Number of points with `f^k p = p`, or `None` for an overflowing count.
    pub fn periodic_count(&self, k: u64) -> Option<u128> {
        match &self.kind {
            Kind::Toral { matrix, .. } => matrix.pow(k).sub_identity().det().abs().to_u128(),
            Kind::Shift { alphabet } => (*alphabet as u128).checked_pow(k.try_into().ok()?),
        }
    }

    /// Every point with `f^k p = p`, in a deterministic order.
    pub fn enumerate_periodic(&self, k: u64) -> Result<Vec<Point>> {
        if k == 0 {
            return Err(Error::BadPeriod);
        }
        let count = self.periodic_count(k).unwrap_or(u128::MAX);
        if count > self.enumeration_cap {
            return Err(Error::CapExceeded {
                required: count,
                cap: self.enumeration_cap,
            });
        }
        match &self.kind {
            Kind::Toral { matrix, .. } => {
                let b = matrix.pow(k).sub_identity();
                let det = b.det();
                if det.is_zero() {
                    return Err(Error::SingularClose { k });
                }
                let adj = b.adjugate();
                let sign = if det.is_negative() { -BigInt::one() } else { BigInt::one() };
                let den = det.abs().to_biguint().expect("positive");
                let diag: Vec<u64> = b
                    .hermite_diagonal()
                    .iter()
                    .map(|h| h.to_u64().expect("bounded by the cap"))
                    .collect();
                let mut out = Vec::with_capacity(count as usize);
                let mut m = vec![0u64; diag.len()];
                loop {
                    let mv: Vec<BigInt> = m.iter().map(|&v| BigInt::from(v)).collect();
                    let num: Vec<BigInt> = adj.mul_vec(&mv).into_iter().map(|v| v * &sign).collect();
                    out.push(Point::Torus(TorusPoint::from_big(&num, &den)));
                    // Odometer over the box ∏ [0, H_ii).
                    let mut i = diag.len();
                    loop {
                        if i == 0 {
                            return Ok(out);
                        }
                        i -= 1;
                        m[i] += 1;
                        if m[i] < diag[i] {
                            break;
                        }
                        m[i] = 0;
                    }
                }
            }
            Kind::Shift { alphabet } => {
                let k = k as usize;
                let mut out = Vec::with_capacity(count as usize);
                let mut word = vec![0u8; k];
                loop {
                    out.push(Point::Shift(ShiftPoint::periodic(*alphabet, word.clone())));
                    let mut i = k;
                    loop {
                        if i == 0 {
                            return Ok(out);
                        }
                        i -= 1;
                        word[i] += 1;
                        if (word[i] as u32) < *alphabet {
                            break;
                        }
                        word[i] = 0;
                    }
                }
            }
        }
    }
}

/// Integer window `[ceil(n(1+σ)), floor(n(1+2σ))]` for window-mode
/// recurrence search.
pub fn return_window(n: u64, sigma: f64) -> RangeInclusive<u64> {
    let lo = (n as f64 * (1.0 + sigma)).ceil() as u64;
    let hi = (n as f64 * (1.0 + 2.0 * sigma)).floor() as u64;
    lo..=hi
}

/// Least-squares decay rate of `ln dist_i` in the distance to the nearer end
/// of the segment.
///
/// The profile has two branches meeting at the turnaround `t`, the index of
/// the smallest distance, where the stable and unstable contributions are of
/// equal size. Indices `i ≤ t` are measured from the start (`m = i`), the rest
/// from the end (`m = k − i`); each branch keeps `m ≥ cutoff` and stays
/// `cutoff` steps away from `t`. The branches share the slope and have their
/// own intercepts, so unequal amplitudes at the two ends do not bias the
/// rate. For a turnaround at `k/2` this is the fit in `min(i, k − i)`. Falls
/// back to a pooled fit in `min(i, k − i)` over all positive distances when
/// the branches leave fewer than two abscissas. Returns `+inf` when every
/// distance is zero.
pub fn fit_decay_rate(distances: &[f64], cutoff: u64) -> f64 {
    let k = distances.len().saturating_sub(1);
    if distances.iter().all(|&d| d == 0.0) {
        return f64::INFINITY;
    }
    let c = cutoff as usize;
    let t = (1..k)
        .filter(|&i| distances[i] > 0.0)
        .min_by(|&a, &b| distances[a].total_cmp(&distances[b]))
        .unwrap_or(k / 2);
    let branch = |range: std::ops::RangeInclusive<usize>, from_start: bool| -> Vec<(f64, f64)> {
        range
            .filter(|&i| distances[i] > 0.0)
            .map(|i| ((if from_start { i } else { k - i }) as f64, distances[i].ln()))
            .collect()
    };
    let start = if t >= 2 * c { branch(c..=t - c, true) } else { Vec::new() };
    let end = if t + c <= k.saturating_sub(c) { branch(t + c..=k - c, false) } else { Vec::new() };
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for pts in [&start, &end] {
        if pts.len() < 2 {
            continue;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        sxy += pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
        sxx += pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    }
    if sxx > 0.0 {
        return -sxy / sxx;
    }
    let pooled: Vec<(f64, f64)> = (0..=k)
        .filter(|&i| distances[i] > 0.0)
        .map(|i| (i.min(k - i) as f64, distances[i].ln()))
        .collect();
    let n = pooled.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = pooled.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pooled.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pooled.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pooled.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 {
        -sxy / sxx
    } else {
        0.0
    }
}

/// `max_i dist_i · exp(gamma · min(i, k - i))`.
pub fn shadow_delta(distances: &[f64], gamma: f64) -> f64 {
    let k = distances.len().saturating_sub(1);
    distances
        .iter()
        .enumerate()
        .map(|(i, &d)| d * (gamma * i.min(k - i) as f64).exp())
        .fold(0.0, f64::max)
}

fn matpow_mod(m: &[i64], d: usize, mut n: u64, den: u64) -> Vec<i64> {
    let modulus = den as u128;
    let reduce = |v: i64| (v as i128).rem_euclid(modulus as i128) as u128;
    let mul = |a: &[u128], b: &[u128]| -> Vec<u128> {
        (0..d * d)
            .map(|idx| {
                let (i, j) = (idx / d, idx % d);
                (0..d).fold(0u128, |acc, k| (acc + (a[i * d + k] * b[k * d + j]) % modulus) % modulus)
            })
            .collect()
    };
    let mut base: Vec<u128> = m.iter().map(|&v| reduce(v)).collect();
    let mut acc: Vec<u128> = (0..d * d).map(|idx| u128::from(idx / d == idx % d) % modulus).collect();
    while n > 0 {
        if n & 1 == 1 {
            acc = mul(&acc, &base);
        }
        n >>= 1;
        if n > 0 {
            base = mul(&base, &base);
        }
    }
    acc.into_iter().map(|v| v as i64).collect()
}
