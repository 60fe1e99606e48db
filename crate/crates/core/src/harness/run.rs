//! Periodic approximation runs: reference exponents, periodic-point sources
//! and per-point error rows.

use crate::base::{return_window, Point};
use crate::error::{Error, Result};
use crate::exponents::{
    good_times, norm_exponents, periodic_exponents, qr_spectrum, subadditive_trace, GoodTimes, SpectrumEstimate,
    Subadditive,
};
use crate::pesin::{drift_bound, DriftParams};

use super::config::{CocycleSetup, ExperimentConfig};

/// Where a periodic point came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    /// Exhaustive enumeration of `Fix(f^k)`.
    Enumerated,
    /// Closing a return `dist(f^j x, f^{j+k} x) < β` of the reference orbit.
    Closed,
    /// Closing a window return found from a good time.
    GoodTime,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Enumerated => "enumerated",
            Source::Closed => "closed",
            Source::GoodTime => "good_time",
        }
    }
}

/// A periodic point together with the orbit segment it shadows, if any.
#[derive(Clone, Debug)]
pub struct PeriodicSample {
    pub k: u64,
    /// Enumeration index, orbit offset `j`, or good time `n`.
    pub point_id: u64,
    pub source: Source,
    pub point: Point,
    pub segment_start: Option<Point>,
    /// NaN for enumerated points.
    pub delta: f64,
    pub fitted_gamma: f64,
}

/// Reference exponents of `μ` for one cocycle.
#[derive(Clone, Debug)]
pub struct MuReference {
    pub spectrum: SpectrumEstimate,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Across-seed spread of the reference values.
    pub spread: f64,
}

/// `k⁻¹ log ‖A^k_p‖ ≤ λ₊ + ε + k⁻¹(log ℓ + c ℓ δ^α)` for a closed orbit.
#[derive(Clone, Copy, Debug)]
pub struct UpperBound {
    pub c_est: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct ApproxRow {
    pub k: u64,
    pub point_id: u64,
    pub source: Source,
    /// Periodic exponents, ascending.
    pub lambda_p: Vec<f64>,
    /// `|λ_i − λ_i^{(p)}|`, ascending index.
    pub errors: Vec<f64>,
    /// Errors of the sums of the top `i` exponents, `i = 1..=d`.
    pub ext_errors: Vec<f64>,
    pub norm_plus: f64,
    pub norm_minus: f64,
    pub norm_err_plus: f64,
    pub norm_err_minus: f64,
    /// `|λ₊ − k⁻¹ log ρ(A^k_p)|`.
    pub radius_err: f64,
    pub delta: f64,
    pub fitted_gamma: f64,
    pub upper: Option<UpperBound>,
}

impl ApproxRow {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn norm_error(&self) -> f64 {
        self.norm_err_plus.max(self.norm_err_minus)
    }
}

/// Best values over the points of one period.
#[derive(Clone, Copy, Debug)]
pub struct BestByK {
    pub k: u64,
    pub points: usize,
    pub best_max_error: f64,
    pub best_norm_error: f64,
    pub best_norm_plus_error: f64,
    pub best_radius_error: f64,
}

/// A stage that could not deliver, with the exit code it maps to.
#[derive(Clone, Debug)]
pub struct Shortfall {
    pub k: Option<u64>,
    pub message: String,
    pub exit_code: i32,
}

impl Shortfall {
    fn from_error(k: Option<u64>, e: &Error) -> Self {
        Shortfall {
            k,
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ApproxReport {
    pub mu: MuReference,
    pub rows: Vec<ApproxRow>,
    pub best_by_k: Vec<BestByK>,
    pub good_times: Option<GoodTimes>,
    /// Whether the good-time search produced a period above `n_floor`.
    pub large_k_achieved: Option<bool>,
    pub shortfalls: Vec<Shortfall>,
}

impl ApproxReport {
    pub fn best_at(&self, k: u64) -> Option<&BestByK> {
        self.best_by_k.iter().find(|b| b.k == k)
    }

    /// Exit code for the CLI: 0, or that of the first shortfall.
    pub fn exit_code(&self) -> i32 {
        self.shortfalls.first().map_or(0, |s| s.exit_code)
    }
}

/// Receives the rows of each stage as soon as they exist, tagged with the
/// cocycle index and its reference.
pub type RowSink<'a> = dyn FnMut(usize, &MuReference, &[ApproxRow]) -> Result<()> + 'a;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mode {
    Spectrum,
    Norms,
}

/// Reference spectrum and norm rates. With `use_truncation`, a triangular
/// cocycle with `mu_dim` takes its norm rates from the `mu_dim` truncation
/// over `mu_dim / 2` steps.
pub fn mu_reference(cfg: &ExperimentConfig, coc: &CocycleSetup, x0: &Point, use_truncation: bool) -> Result<MuReference> {
    let spectrum = qr_spectrum(&coc.spec, &cfg.base, x0, cfg.n_steps, cfg.seeds, cfg.rng_seed)?;
    if let (true, Some(dim)) = (use_truncation, coc.mu_dim) {
        let wide = coc.spec.with_dim(dim).expect("mu_dim is only accepted for triangular cocycles");
        let n = (dim / 2).max(1);
        let rates = spectrum
            .seeds
            .iter()
            .map(|p| norm_exponents(&wide, &cfg.base, p, n))
            .collect::<Result<Vec<_>>>()?;
        let m = rates.len() as f64;
        let plus: Vec<f64> = rates.iter().map(|r| r.0).collect();
        let spread = plus.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - plus.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(MuReference {
            lambda_plus: plus.iter().sum::<f64>() / m,
            lambda_minus: rates.iter().map(|r| r.1).sum::<f64>() / m,
            spread,
            spectrum,
        });
    }
    Ok(MuReference {
        lambda_plus: spectrum.lambda_plus,
        lambda_minus: spectrum.lambda_minus,
        spread: spectrum.per_seed_spread,
        spectrum,
    })
}

/// Periodic points of period `k`: all of them when the count is within the
/// enumeration cap, otherwise closed returns of the reference orbit.
pub fn points_for_k(cfg: &ExperimentConfig, x0: &Point, k: u64) -> Result<(Vec<PeriodicSample>, Option<Shortfall>)> {
    match cfg.base.enumerate_periodic(k) {
        Ok(points) => Ok((
            points
                .into_iter()
                .enumerate()
                .map(|(i, point)| PeriodicSample {
                    k,
                    point_id: i as u64,
                    source: Source::Enumerated,
                    point,
                    segment_start: None,
                    delta: f64::NAN,
                    fitted_gamma: f64::NAN,
                })
                .collect(),
            None,
        )),
        Err(e @ Error::CapExceeded { .. }) => {
            let closed = closed_points(cfg, x0, k)?;
            let short = closed.is_empty().then(|| Shortfall {
                k: Some(k),
                message: format!("{e}; no return below beta = {} in {} steps", cfg.beta, cfg.n_steps),
                exit_code: e.exit_code(),
            });
            Ok((closed, short))
        }
        Err(e) => Err(e),
    }
}

/// Up to `closed_per_k` distinct period-`k` points closing the closest
/// returns `dist(f^j x, f^{j+k} x) < β`, `0 ≤ j < n_steps`.
pub fn closed_points(cfg: &ExperimentConfig, x0: &Point, k: u64) -> Result<Vec<PeriodicSample>> {
    let sys = &cfg.base;
    let ku = k as usize;
    let orbit = sys.orbit(x0, cfg.n_steps + ku);
    let mut cands: Vec<(f64, usize)> = (0..cfg.n_steps)
        .map(|j| (sys.dist(&orbit[j], &orbit[j + ku]), j))
        .filter(|&(d, _)| d < cfg.beta)
        .collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<PeriodicSample> = Vec::new();
    for (_, j) in cands {
        if out.len() >= cfg.closed_per_k {
            break;
        }
        let rep = sys.close_orbit(&orbit[j], k)?;
        if out.iter().any(|s| sys.dist(&s.point, &rep.p) < 1e-12) {
            continue;
        }
        out.push(PeriodicSample {
            k,
            point_id: j as u64,
            source: Source::Closed,
            point: rep.p,
            segment_start: Some(orbit[j].clone()),
            delta: rep.delta,
            fitted_gamma: rep.fitted_gamma,
        });
    }
    Ok(out)
}

fn top_sums(ascending: &[f64]) -> Vec<f64> {
    ascending
        .iter()
        .rev()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Error row of one cocycle at one periodic point.
pub fn approx_row(cfg: &ExperimentConfig, coc: &CocycleSetup, mu: &MuReference, s: &PeriodicSample) -> Result<ApproxRow> {
    let sys = &cfg.base;
    let pe = periodic_exponents(&coc.spec, sys, &s.point, s.k)?;
    let errors = mu
        .spectrum
        .exponents
        .iter()
        .zip(&pe.spectrum)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let ext_errors = top_sums(&mu.spectrum.exponents)
        .iter()
        .zip(top_sums(&pe.spectrum))
        .map(|(a, b)| (a - b).abs())
        .collect();
    let upper = match &s.segment_start {
        Some(start) if s.delta < 1.0 => {
            let check = drift_bound(
                &coc.spec,
                sys,
                start,
                &s.point,
                s.k,
                &DriftParams {
                    ell: cfg.ell,
                    eps: cfg.eps,
                    alpha: cfg.alpha,
                    gamma: cfg.gamma,
                    lambda_plus: mu.lambda_plus,
                    lambda_minus: mu.lambda_minus,
                },
            )?;
            let bound = mu.lambda_plus
                + cfg.eps
                + (cfg.ell.ln() + check.c_est * cfg.ell * check.delta.powf(cfg.alpha)) / s.k as f64;
            Some(UpperBound {
                c_est: check.c_est,
                bound,
                holds: !(pe.norm_plus > bound + 1e-12),
            })
        }
        _ => None,
    };
    Ok(ApproxRow {
        k: s.k,
        point_id: s.point_id,
        source: s.source,
        radius_err: (mu.lambda_plus - pe.spectral_radius()).abs(),
        norm_err_plus: (mu.lambda_plus - pe.norm_plus).abs(),
        norm_err_minus: (mu.lambda_minus - pe.norm_minus).abs(),
        lambda_p: pe.spectrum,
        errors,
        ext_errors,
        norm_plus: pe.norm_plus,
        norm_minus: pe.norm_minus,
        delta: s.delta,
        fitted_gamma: s.fitted_gamma,
        upper,
    })
}

/// Minimum of each error measure over the points of each period.
pub fn best_by_k(rows: &[ApproxRow]) -> Vec<BestByK> {
    let mut ks: Vec<u64> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let at: Vec<&ApproxRow> = rows.iter().filter(|r| r.k == k).collect();
            let min = |f: &dyn Fn(&ApproxRow) -> f64| at.iter().map(|r| f(r)).fold(f64::INFINITY, f64::min);
            BestByK {
                k,
                points: at.len(),
                best_max_error: min(&|r| r.max_error()),
                best_norm_error: min(&|r| r.norm_error()),
                best_norm_plus_error: min(&|r| r.norm_err_plus),
                best_radius_error: min(&|r| r.radius_err),
            }
        })
        .collect()
}

/// Good times of the joint trace of `cocs` at `x0`, then one window return
/// per good time `n ≥ n_floor` with `k ∈ [n(1+σ), n(1+2σ)]`, closed into a
/// period-`k` point.
fn good_time_search(
    cfg: &ExperimentConfig,
    cocs: &[&CocycleSetup],
    refs: &[MuReference],
    x0: &Point,
) -> Result<(GoodTimes, Vec<PeriodicSample>)> {
    let sys = &cfg.base;
    let traces = cocs
        .iter()
        .map(|c| subadditive_trace(&c.spec, sys, x0, cfg.good_horizon))
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<_> = traces.iter().flat_map(|t| [t.norm_series(), t.inverse_series()]).collect();
    let dyn_series: Vec<&dyn Subadditive> = series.iter().map(|s| s as &dyn Subadditive).collect();
    let lambdas: Vec<f64> = refs.iter().flat_map(|m| [m.lambda_plus, -m.lambda_minus]).collect();
    let gt = good_times(&dyn_series, &lambdas, cfg.eps, cfg.l)?;
    let candidates: Vec<u64> = gt
        .members
        .iter()
        .map(|&n| n as u64)
        .filter(|&n| n >= cfg.n_floor.max(1))
        .collect();
    let mut samples: Vec<PeriodicSample> = Vec::new();
    let Some(&last) = candidates.last() else {
        return Ok((gt, samples));
    };
    // dist(x, f^k x) for every k a window can reach.
    let reach = *return_window(last, cfg.sigma).end();
    let mut returns = Vec::with_capacity(reach as usize + 1);
    let mut cur = x0.clone();
    for _ in 0..=reach {
        returns.push(sys.dist(x0, &cur));
        cur = sys.step(&cur, 1);
    }
    for n in candidates {
        if samples.len() >= cfg.good_points {
            break;
        }
        let window = return_window(n, cfg.sigma);
        let Some(k) = window.clone().find(|&k| k >= 1 && returns[k as usize] < cfg.beta) else {
            continue;
        };
        if samples.iter().any(|s| s.k == k) {
            continue;
        }
        let rep = sys.close_orbit(x0, k)?;
        samples.push(PeriodicSample {
            k,
            point_id: n,
            source: Source::GoodTime,
            point: rep.p,
            segment_start: Some(x0.clone()),
            delta: rep.delta,
            fitted_gamma: rep.fitted_gamma,
        });
    }
    Ok((gt, samples))
}

fn run(cfg: &ExperimentConfig, cocs: &[&CocycleSetup], mode: Mode, with_good_times: bool, sink: &mut RowSink<'_>) -> Result<Vec<ApproxReport>> {
    if mode == Mode::Spectrum {
        if let Some(c) = cocs.iter().find(|c| c.spec.dim > 6) {
            return Err(Error::Config(format!(
                "full-spectrum comparison needs d ≤ 6, got d = {}",
                c.spec.dim
            )));
        }
    }
    let x0 = cfg.start_point();
    let refs = cocs
        .iter()
        .map(|c| mu_reference(cfg, c, &x0, mode == Mode::Norms))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<Vec<ApproxRow>> = vec![Vec::new(); cocs.len()];
    let mut shortfalls = Vec::new();
    let mut emit = |samples: &[PeriodicSample], rows: &mut Vec<Vec<ApproxRow>>| -> Result<()> {
        for (j, (c, mu)) in cocs.iter().zip(&refs).enumerate() {
            let batch = samples
                .iter()
                .map(|s| approx_row(cfg, c, mu, s))
                .collect::<Result<Vec<_>>>()?;
            sink(j, mu, &batch)?;
            rows[j].extend(batch);
        }
        Ok(())
    };
    for k in 1..=cfg.k_max {
        let (samples, short) = points_for_k(cfg, &x0, k)?;
        shortfalls.extend(short);
        emit(&samples, &mut rows)?;
    }
    let mut good = None;
    let mut large_k = None;
    if with_good_times {
        let (gt, samples) = good_time_search(cfg, cocs, &refs, &x0)?;
        if samples.is_empty() {
            let e = Error::NoReturn { beta: cfg.beta };
            let mut s = Shortfall::from_error(None, &e);
            if gt.members.is_empty() {
                s.message = format!("{}; the good-time set is empty", s.message);
            }
            shortfalls.push(s);
        }
        large_k = Some(samples.iter().any(|s| s.k > cfg.n_floor));
        emit(&samples, &mut rows)?;
        good = Some(gt);
    }
    Ok(refs
        .into_iter()
        .zip(rows)
        .map(|(mu, rows)| ApproxReport {
            best_by_k: best_by_k(&rows),
            mu,
            rows,
            good_times: good.clone(),
            large_k_achieved: large_k,
            shortfalls: shortfalls.clone(),
        })
        .collect())
}

fn discard(_: usize, _: &MuReference, _: &[ApproxRow]) -> Result<()> {
    Ok(())
}

/// Spectrum errors at periodic points of the first cocycle (`d ≤ 6`).
pub fn run_theorem1(cfg: &ExperimentConfig) -> Result<ApproxReport> {
    run_theorem1_with(cfg, &mut discard)
}

pub fn run_theorem1_with(cfg: &ExperimentConfig, sink: &mut RowSink<'_>) -> Result<ApproxReport> {
    let mut out = run(cfg, &[&cfg.cocycles[0]], Mode::Spectrum, false, sink)?;
    Ok(out.remove(0))
}

/// Norm errors at periodic points of the first cocycle, including periods
/// reached from good times.
pub fn run_theorem2(cfg: &ExperimentConfig) -> Result<ApproxReport> {
    run_theorem2_with(cfg, &mut discard)
}

pub fn run_theorem2_with(cfg: &ExperimentConfig, sink: &mut RowSink<'_>) -> Result<ApproxReport> {
    let mut out = run(cfg, &[&cfg.cocycles[0]], Mode::Norms, true, sink)?;
    Ok(out.remove(0))
}

/// Every cocycle evaluated at the same periodic points; the good-time
/// search uses the joint good-time set of all traces.
pub fn run_multi(cfg: &ExperimentConfig) -> Result<Vec<ApproxReport>> {
    run_multi_with(cfg, &mut discard)
}

pub fn run_multi_with(cfg: &ExperimentConfig, sink: &mut RowSink<'_>) -> Result<Vec<ApproxReport>> {
    let cocs: Vec<&CocycleSetup> = cfg.cocycles.iter().collect();
    let mode = if cocs.iter().all(|c| c.spec.dim <= 6) {
        Mode::Spectrum
    } else {
        Mode::Norms
    };
    run(cfg, &cocs, mode, true, sink)
}
