//! CSV emission. Floats carry 17 significant digits.

use std::fs::File;
use std::path::Path;

use csv::Writer;

use crate::error::Result;
use crate::exponents::{GoodTimes, SpectrumEstimate};
use crate::pesin::ConeReport;

use super::run::{ApproxRow, BestByK, PeriodicSample};

/// `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<Writer<File>> {
    Ok(Writer::from_path(path)?)
}

/// `spectrum.csv`: `seed, i, lambda`.
pub fn write_spectrum(path: &Path, spectra: &[SpectrumEstimate]) -> Result<()> {
    let mut w = writer(path)?;
    let multi = spectra.len() > 1;
    if multi {
        w.write_record(["cocycle", "seed", "i", "lambda"])?;
    } else {
        w.write_record(["seed", "i", "lambda"])?;
    }
    for (c, s) in spectra.iter().enumerate() {
        for (seed, lams) in s.per_seed.iter().enumerate() {
            for (i, l) in lams.iter().enumerate() {
                let mut rec = Vec::with_capacity(4);
                if multi {
                    rec.push(c.to_string());
                }
                rec.extend([seed.to_string(), (i + 1).to_string(), fmt_f64(*l)]);
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Incremental `periodic.csv` writer.
pub struct PeriodicCsv {
    w: Writer<File>,
    d: usize,
    mu_spread: f64,
}

impl PeriodicCsv {
    /// Header `k, point_id, source, lambda_1..d, err_1..d, norm_err_plus,
    /// norm_err_minus, radius_err, mu_spread, delta, fitted_gamma`.
    pub fn create(path: &Path, d: usize, mu_spread: f64) -> Result<Self> {
        let mut w = writer(path)?;
        let mut header: Vec<String> = ["k", "point_id", "source"].map(String::from).to_vec();
        header.extend((1..=d).map(|i| format!("lambda_{i}")));
        header.extend((1..=d).map(|i| format!("err_{i}")));
        header.extend(
            ["norm_err_plus", "norm_err_minus", "radius_err", "mu_spread", "delta", "fitted_gamma"].map(String::from),
        );
        w.write_record(&header)?;
        w.flush()?;
        Ok(PeriodicCsv { w, d, mu_spread })
    }

    pub fn write_rows(&mut self, rows: &[ApproxRow]) -> Result<()> {
        for r in rows {
            let mut rec = vec![r.k.to_string(), r.point_id.to_string(), r.source.as_str().to_string()];
            rec.extend(r.lambda_p.iter().take(self.d).map(|v| fmt_f64(*v)));
            rec.extend(r.errors.iter().take(self.d).map(|v| fmt_f64(*v)));
            rec.extend(
                [r.norm_err_plus, r.norm_err_minus, r.radius_err, self.mu_spread, r.delta, r.fitted_gamma].map(fmt_f64),
            );
            self.w.write_record(&rec)?;
        }
        self.w.flush()?;
        Ok(())
    }
}

/// Periodic data without reference errors: `k, point_id, source,
/// lambda_1..d, norm_plus, norm_minus, delta, fitted_gamma`.
pub fn write_periodic_raw(path: &Path, d: usize, rows: &[(PeriodicSample, Vec<f64>, f64, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["k", "point_id", "source"].map(String::from).to_vec();
    header.extend((1..=d).map(|i| format!("lambda_{i}")));
    header.extend(["norm_plus", "norm_minus", "delta", "fitted_gamma"].map(String::from));
    w.write_record(&header)?;
    for (s, spectrum, plus, minus) in rows {
        let mut rec = vec![s.k.to_string(), s.point_id.to_string(), s.source.as_str().to_string()];
        rec.extend(spectrum.iter().map(|v| fmt_f64(*v)));
        rec.extend([*plus, *minus, s.delta, s.fitted_gamma].map(fmt_f64));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `best_by_k.csv`: `k, points, best_max_error, best_norm_error,
/// best_norm_plus_error, best_radius_error`.
pub fn write_best(path: &Path, best: &[BestByK]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "k",
        "points",
        "best_max_error",
        "best_norm_error",
        "best_norm_plus_error",
        "best_radius_error",
    ])?;
    for b in best {
        w.write_record([
            b.k.to_string(),
            b.points.to_string(),
            fmt_f64(b.best_max_error),
            fmt_f64(b.best_norm_error),
            fmt_f64(b.best_norm_plus_error),
            fmt_f64(b.best_radius_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `goodtimes.csv`: `n, member, density_so_far` for `n = 1..=N`.
pub fn write_goodtimes(path: &Path, gt: &GoodTimes, l: usize) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["n", "member", "density_so_far"])?;
    let mut count = 0usize;
    let mut members = gt.members.iter().peekable();
    for n in 1..=gt.horizon {
        let member = members.next_if(|&&m| m == n).is_some();
        debug_assert_eq!(member, n >= l && gt.last_violation[n] < l);
        count += member as usize;
        w.write_record([n.to_string(), (member as u8).to_string(), fmt_f64(count as f64 / n as f64)])?;
    }
    w.flush()?;
    Ok(())
}

/// One sampled point of the Pesin-set report.
#[derive(Clone, Copy, Debug)]
pub struct PesinRow {
    pub point_id: usize,
    pub k_eps: f64,
    pub member: bool,
}

/// `pesin.csv`: `point_id, K_eps, member`.
pub fn write_pesin(path: &Path, rows: &[PesinRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["point_id", "K_eps", "member"])?;
    for r in rows {
        w.write_record([r.point_id.to_string(), fmt_f64(r.k_eps), (r.member as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `cones.csv`: `i, check, margin`.
pub fn write_cones(path: &Path, report: &ConeReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "check", "margin"])?;
    for r in &report.rows {
        w.write_record([r.index.to_string(), r.check.to_string(), fmt_f64(r.margin)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let v = std::f64::consts::PI;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}
