//! Subcommand bodies: run an experiment and write its CSV files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::base::Point;
use crate::cocycle::CocycleSpec;
use crate::error::{Error, Result};
use crate::exponents::{good_times, periodic_exponents, qr_spectrum, subadditive_trace, SpectrumEstimate, Subadditive};
use crate::pesin::{cone_check, lyapunov_gram_lenient, pesin_member, ConeSpec, SplittingField};

use super::config::ExperimentConfig;
use super::output::{self, PeriodicCsv, PesinRow};
use super::run::{self, ApproxReport, ApproxRow, MuReference, Shortfall};

/// Orbit length used for Oseledets splittings along orbits.
const SPLITTING_HORIZON: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Periodic,
    Theorem1,
    Theorem2,
    Multi,
    GoodTimes,
    Pesin,
    Cones,
}

/// What a command produced: summary lines for the terminal and the exit code.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn absorb(&mut self, shortfalls: &[Shortfall]) {
        for s in shortfalls {
            let at = s.k.map(|k| format!(" at k = {k}")).unwrap_or_default();
            self.lines.push(format!("incomplete{at}: {}", s.message));
        }
        if self.exit_code == 0 {
            self.exit_code = shortfalls.first().map_or(0, |s| s.exit_code);
        }
    }
}

pub fn execute(cmd: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    fs::create_dir_all(out_dir)?;
    let mut out = Outcome::default();
    match cmd {
        Command::Spectrum => spectrum(cfg, out_dir, &mut out)?,
        Command::Periodic => periodic(cfg, out_dir, &mut out)?,
        Command::Theorem1 | Command::Theorem2 => theorem(cmd, cfg, out_dir, &mut out)?,
        Command::Multi => multi(cfg, out_dir, &mut out)?,
        Command::GoodTimes => goodtimes(cfg, out_dir, &mut out)?,
        Command::Pesin => pesin(cfg, out_dir, &mut out)?,
        Command::Cones => cones(cfg, out_dir, &mut out)?,
    }
    Ok(out)
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

fn spectra(cfg: &ExperimentConfig, x0: &Point) -> Result<Vec<SpectrumEstimate>> {
    cfg.cocycles
        .iter()
        .map(|c| qr_spectrum(&c.spec, &cfg.base, x0, cfg.n_steps, cfg.seeds, cfg.rng_seed))
        .collect()
}

fn spectrum(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let x0 = cfg.start_point();
    let all = spectra(cfg, &x0)?;
    for (i, s) in all.iter().enumerate() {
        out.lines.push(format!(
            "cocycle {i}: spectrum [{}], seed spread {:.2e}, mean log|det| {:.6}",
            list(&s.exponents),
            s.per_seed_spread,
            s.log_det_average
        ));
    }
    let path = dir.join("spectrum.csv");
    output::write_spectrum(&path, &all)?;
    out.files.push(path);
    Ok(())
}

fn periodic(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let x0 = cfg.start_point();
    let coc = &cfg.cocycles[0].spec;
    let mut rows = Vec::new();
    let mut shortfalls = Vec::new();
    for k in 1..=cfg.k_max {
        let (samples, short) = run::points_for_k(cfg, &x0, k)?;
        shortfalls.extend(short);
        out.lines.push(format!("k = {k}: {} points", samples.len()));
        for s in samples {
            let pe = periodic_exponents(coc, &cfg.base, &s.point, k)?;
            rows.push((s, pe.spectrum, pe.norm_plus, pe.norm_minus));
        }
    }
    let path = dir.join("periodic.csv");
    output::write_periodic_raw(&path, coc.dim, &rows)?;
    out.files.push(path);
    out.absorb(&shortfalls);
    Ok(())
}

fn summarize(out: &mut Outcome, label: &str, r: &ApproxReport) {
    out.lines.push(format!(
        "{label}: lambda+ = {:.6}, lambda- = {:.6}, spectrum [{}]",
        r.mu.lambda_plus,
        r.mu.lambda_minus,
        list(&r.mu.spectrum.exponents)
    ));
    for b in &r.best_by_k {
        out.lines.push(format!(
            "  k = {:>4} points = {:>7} best max err = {:.3e} best norm err = {:.3e} best radius err = {:.3e}",
            b.k, b.points, b.best_max_error, b.best_norm_error, b.best_radius_error
        ));
    }
    if let Some(gt) = &r.good_times {
        out.lines.push(format!(
            "  good times: {} of N = {} (density {:.4}), large k reached: {}",
            gt.members.len(),
            gt.horizon,
            gt.density,
            r.large_k_achieved.unwrap_or(false)
        ));
    }
    let violations = r.rows.iter().filter(|row| row.upper.is_some_and(|u| !u.holds)).count();
    if violations > 0 {
        out.lines.push(format!("  upper norm bound fails at {violations} closed orbits"));
    }
}

fn theorem(cmd: Command, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let path = dir.join("periodic.csv");
    let mut csv: Option<PeriodicCsv> = None;
    let d = cfg.cocycles[0].spec.dim;
    let mut sink = |_: usize, mu: &MuReference, rows: &[ApproxRow]| -> Result<()> {
        if csv.is_none() {
            csv = Some(PeriodicCsv::create(&path, d, mu.spread)?);
        }
        csv.as_mut().unwrap().write_rows(rows)
    };
    let report = if cmd == Command::Theorem1 {
        run::run_theorem1_with(cfg, &mut sink)?
    } else {
        run::run_theorem2_with(cfg, &mut sink)?
    };
    drop(sink);
    if csv.is_none() {
        PeriodicCsv::create(&path, d, report.mu.spread)?;
    }
    out.files.push(path);
    let best = dir.join("best_by_k.csv");
    output::write_best(&best, &report.best_by_k)?;
    out.files.push(best);
    if let Some(gt) = &report.good_times {
        let p = dir.join("goodtimes.csv");
        output::write_goodtimes(&p, gt, cfg.l)?;
        out.files.push(p);
    }
    summarize(out, if cmd == Command::Theorem1 { "theorem1" } else { "theorem2" }, &report);
    out.absorb(&report.shortfalls);
    Ok(())
}

fn multi(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let reports = run::run_multi(cfg)?;
    for (j, r) in reports.iter().enumerate() {
        let path = dir.join(format!("periodic_{j}.csv"));
        let mut csv = PeriodicCsv::create(&path, cfg.cocycles[j].spec.dim, r.mu.spread)?;
        csv.write_rows(&r.rows)?;
        out.files.push(path);
        summarize(out, &format!("cocycle {j}"), r);
    }
    if let Some(gt) = reports.first().and_then(|r| r.good_times.as_ref()) {
        let p = dir.join("goodtimes.csv");
        output::write_goodtimes(&p, gt, cfg.l)?;
        out.files.push(p);
    }
    if let Some(r) = reports.first() {
        out.absorb(&r.shortfalls);
    }
    Ok(())
}

fn goodtimes(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let x0 = cfg.start_point();
    let all = spectra(cfg, &x0)?;
    let traces = cfg
        .cocycles
        .iter()
        .map(|c| subadditive_trace(&c.spec, &cfg.base, &x0, cfg.good_horizon))
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<_> = traces.iter().flat_map(|t| [t.norm_series(), t.inverse_series()]).collect();
    let refs: Vec<&dyn Subadditive> = series.iter().map(|s| s as &dyn Subadditive).collect();
    let lambdas: Vec<f64> = all.iter().flat_map(|s| [s.lambda_plus, -s.lambda_minus]).collect();
    let gt = good_times(&refs, &lambdas, cfg.eps, cfg.l)?;
    out.lines.push(format!(
        "good times: {} of N = {} (density {:.4}), smallest workable L = {:?}",
        gt.members.len(),
        gt.horizon,
        gt.density,
        gt.min_l
    ));
    let path = dir.join("goodtimes.csv");
    output::write_goodtimes(&path, &gt, cfg.l)?;
    out.files.push(path);
    Ok(())
}

/// `K_ε` of the first cocycle at `seeds` sample points. Membership is in
/// `Λ_{ε,ℓ}`, intersected with `R_{ε′,ℓ′}` of the derivative cocycle on a
/// toral base.
fn pesin(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let x0 = cfg.start_point();
    let coc = &cfg.cocycles[0].spec;
    let spectrum = qr_spectrum(coc, &cfg.base, &x0, cfg.n_steps, cfg.seeds, cfg.rng_seed)?;
    let field = SplittingField::for_cocycle(coc, &cfg.base, &x0, &spectrum, SPLITTING_HORIZON)?;
    let deriv = if cfg.base.is_toral() {
        let d = CocycleSpec::derivative(&cfg.base)?;
        let s = qr_spectrum(&d, &cfg.base, &x0, cfg.n_steps, 1, cfg.rng_seed)?;
        let f = SplittingField::for_cocycle(&d, &cfg.base, &x0, &s, SPLITTING_HORIZON)?;
        Some((d, f))
    } else {
        None
    };
    let n_prime = crate::pesin::default_truncation(cfg.eps_prime);
    let mut rows = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for (i, p) in spectrum.seeds.iter().enumerate() {
        let m = lyapunov_gram_lenient(coc, &cfg.base, p, cfg.eps, &field, cfg.n_trunc)?;
        worst_tail = worst_tail.max(m.truncation_tail);
        let mut member = pesin_member(&m, cfg.ell);
        if let Some((d, f)) = &deriv {
            let r = lyapunov_gram_lenient(d, &cfg.base, p, cfg.eps_prime, f, n_prime)?;
            member &= pesin_member(&r, cfg.ell_prime);
        }
        rows.push(PesinRow {
            point_id: i,
            k_eps: m.k_eps,
            member,
        });
    }
    let inside = rows.iter().filter(|r| r.member).count();
    out.lines.push(format!(
        "Pesin set: {inside} of {} sampled points (fraction {:.3}), largest series tail {:.1e}",
        rows.len(),
        inside as f64 / rows.len() as f64,
        worst_tail
    ));
    let path = dir.join("pesin.csv");
    output::write_pesin(&path, &rows)?;
    out.files.push(path);
    Ok(())
}

/// Cone invariance along the first return of the reference orbit within
/// `β`, at period `k ≥ L`.
fn cones(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let x0 = cfg.start_point();
    let coc = &cfg.cocycles[0].spec;
    let spectrum = qr_spectrum(coc, &cfg.base, &x0, cfg.n_steps, cfg.seeds, cfg.rng_seed)?;
    let cone = ConeSpec::new(&spectrum, cfg.eps)?;
    let field = SplittingField::for_cocycle(coc, &cfg.base, &x0, &spectrum, SPLITTING_HORIZON)?;
    let k = *cfg
        .base
        .find_recurrence(&x0, cfg.beta, cfg.l as u64..=cfg.n_steps as u64)
        .first()
        .ok_or(Error::NoReturn { beta: cfg.beta })?;
    let shadow = cfg.base.close_orbit(&x0, k)?;
    let report = cone_check(coc, &cfg.base, &x0, &shadow.p, k, &cone, &field, cfg.samples, cfg.n_trunc)?;
    out.lines.push(format!(
        "cones at k = {k} (delta {:.2e}, theta {:.4}): failure fraction {:.4}, final inclusion {:.4}",
        shadow.delta, cone.theta, report.failure_fraction, report.final_inclusion_fraction
    ));
    for check in ["cone", "expansion", "final"] {
        out.lines.push(format!("  worst {check} margin {:.3e}", report.worst(check)));
    }
    let path = dir.join("cones.csv");
    output::write_cones(&path, &report)?;
    out.files.push(path);
    Ok(())
}
