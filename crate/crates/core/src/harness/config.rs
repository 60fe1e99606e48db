//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

use crate::base::{BaseSystem, Point, DEFAULT_ENUMERATION_CAP};
use crate::cocycle::CocycleSpec;
use crate::error::{Error, Result};

/// Base map section: `{"kind": "toral", "matrix": [[2,1],[1,1]]}` or
/// `{"kind": "shift", "alphabet": 2}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseConfig {
    Toral { matrix: Vec<Vec<i64>> },
    Shift { alphabet: u32 },
}

impl BaseConfig {
    pub fn build(&self) -> Result<BaseSystem> {
        match self {
            BaseConfig::Toral { matrix } => BaseSystem::toral(matrix),
            BaseConfig::Shift { alphabet } => BaseSystem::full_shift(*alphabet),
        }
    }
}

/// One entry of `cocycles`: `{"family": ..., "dim": ..., "params": {...}}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleConfig {
    pub family: String,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub params: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    matrix: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagonalParams {
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagRotationParams {
    exponents: Vec<f64>,
    #[serde(default)]
    freq: Option<Vec<f64>>,
    #[serde(default)]
    phase: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangularParams {
    s: f64,
    g: f64,
    #[serde(default)]
    eta: f64,
    #[serde(default)]
    freq: Option<Vec<f64>>,
    #[serde(default)]
    phase: f64,
    #[serde(default)]
    mu_dim: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExteriorParams {
    inner: CocycleConfig,
    order: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmptyParams {}

/// A cocycle ready to run, plus the truncation used for its reference
/// norm rates (triangular families only).
#[derive(Clone, Debug)]
pub struct CocycleSetup {
    pub spec: CocycleSpec,
    pub mu_dim: Option<usize>,
}

fn params<T: for<'de> Deserialize<'de>>(family: &str, v: &Value) -> Result<T> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| Error::Config(format!("{family} params: {e}")))
}

fn frequency(family: &str, freq: Option<Vec<f64>>, sys: &BaseSystem) -> Result<Vec<f64>> {
    let n = sys.coord_dim();
    let freq = freq.unwrap_or_else(|| {
        let mut f = vec![0.0; n];
        f[0] = 1.0;
        f
    });
    if freq.len() != n {
        return Err(Error::Config(format!(
            "{family}: freq has {} entries, base coordinates have {n}",
            freq.len()
        )));
    }
    Ok(freq)
}

fn square(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("constant: matrix must be square and nonempty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl CocycleConfig {
    pub fn build(&self, sys: &BaseSystem) -> Result<CocycleSetup> {
        let f = self.family.as_str();
        let mut mu_dim = None;
        let spec = match f {
            "constant" => CocycleSpec::constant(square(&params::<ConstantParams>(f, &self.params)?.matrix)?)?,
            "identity" => {
                params::<EmptyParams>(f, &self.params)?;
                let d = self.dim.ok_or_else(|| Error::Config("identity needs dim".into()))?;
                if d == 0 {
                    return Err(Error::Config("identity needs dim ≥ 1".into()));
                }
                CocycleSpec::identity(d)
            }
            "diagonal" => CocycleSpec::diagonal(&params::<DiagonalParams>(f, &self.params)?.values)?,
            "diag_rotation" => {
                let p: DiagRotationParams = params(f, &self.params)?;
                if p.exponents.len() < 2 {
                    return Err(Error::Config("diag_rotation needs at least two exponents".into()));
                }
                CocycleSpec::diag_rotation(p.exponents, frequency(f, p.freq, sys)?, p.phase)?
            }
            "triangular" => {
                let p: TriangularParams = params(f, &self.params)?;
                let d = self.dim.ok_or_else(|| Error::Config("triangular needs dim".into()))?;
                if let Some(m) = p.mu_dim {
                    if m < d {
                        return Err(Error::Config("triangular: mu_dim must be at least dim".into()));
                    }
                }
                mu_dim = p.mu_dim;
                CocycleSpec::triangular(d, p.s, p.g, p.eta, frequency(f, p.freq, sys)?, p.phase)?
            }
            "derivative" => {
                params::<EmptyParams>(f, &self.params)?;
                CocycleSpec::derivative(sys)?
            }
            "exterior" => {
                let p: ExteriorParams = params(f, &self.params)?;
                p.inner.build(sys)?.spec.exterior_power(p.order)?
            }
            other => return Err(Error::Config(format!("unknown cocycle family '{other}'"))),
        };
        if let Some(d) = self.dim {
            if d != spec.dim {
                return Err(Error::Config(format!("{f}: dim {d} does not match the matrix size {}", spec.dim)));
            }
        }
        Ok(CocycleSetup { spec, mu_dim })
    }
}

fn default_ell() -> f64 {
    10.0
}
fn default_k_max() -> u64 {
    8
}
fn default_n_steps() -> usize {
    10_000
}
fn default_seeds() -> usize {
    4
}
fn default_l() -> usize {
    20
}
fn default_beta() -> f64 {
    1e-2
}
fn default_closed_per_k() -> usize {
    16
}
fn default_good_horizon() -> usize {
    1000
}
fn default_good_points() -> usize {
    4
}
fn default_samples() -> usize {
    64
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    base: BaseConfig,
    cocycles: Vec<CocycleConfig>,
    eps: f64,
    #[serde(default)]
    eps_prime: Option<f64>,
    #[serde(default = "default_ell")]
    ell: f64,
    #[serde(default)]
    ell_prime: Option<f64>,
    #[serde(default)]
    sigma: Option<f64>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default = "default_k_max")]
    k_max: u64,
    #[serde(default = "default_n_steps")]
    n_steps: usize,
    #[serde(default = "default_seeds")]
    seeds: usize,
    #[serde(rename = "L", default = "default_l")]
    l: usize,
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default)]
    rng_seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    enumeration_cap: Option<u64>,
    #[serde(default = "default_closed_per_k")]
    closed_per_k: usize,
    #[serde(default = "default_good_horizon")]
    good_horizon: usize,
    #[serde(default = "default_good_points")]
    good_points: usize,
    #[serde(default)]
    n_floor: Option<u64>,
    #[serde(default)]
    n_trunc: Option<usize>,
    #[serde(default = "default_samples")]
    samples: usize,
}

/// A validated experiment.
///
/// `alpha` defaults to 1 (every built-in family is Lipschitz in the base
/// coordinates) and `gamma` is `0.9 · gamma_hyp` of the base. `eps_prime`
/// defaults to `alpha·gamma/4`, `ell_prime` to `ell`, `sigma` to
/// `4·eps/(alpha·gamma)`.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub base: BaseSystem,
    pub cocycles: Vec<CocycleSetup>,
    pub eps: f64,
    pub eps_prime: f64,
    pub ell: f64,
    pub ell_prime: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub k_max: u64,
    pub n_steps: usize,
    pub seeds: usize,
    /// Good-time threshold `L`.
    pub l: usize,
    /// Return radius for recurrence searches.
    pub beta: f64,
    pub rng_seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Closed orbits kept per period when enumeration exceeds the cap.
    pub closed_per_k: usize,
    /// Trace length `N` for the good-time scan.
    pub good_horizon: usize,
    /// Good-time returns collected by the window search.
    pub good_points: usize,
    /// Smallest good time used for the window search.
    pub n_floor: u64,
    pub n_trunc: usize,
    /// Sample vectors per cone.
    pub samples: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let mut base = raw.base.build()?;
        if let Some(cap) = raw.enumeration_cap {
            base.enumeration_cap = cap as u128;
        } else {
            base.enumeration_cap = DEFAULT_ENUMERATION_CAP;
        }
        if raw.cocycles.is_empty() {
            return Err(Error::Config("at least one cocycle is required".into()));
        }
        let cocycles = raw
            .cocycles
            .iter()
            .map(|c| c.build(&base))
            .collect::<Result<Vec<_>>>()?;
        let alpha = raw.alpha.unwrap_or(1.0);
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1]".into()));
        }
        let gamma = 0.9 * base.gamma_hyp();
        let eps_prime = raw.eps_prime.unwrap_or(alpha * gamma / 4.0);
        let eps0 = (alpha * gamma / 4.0).min(eps_prime);
        if !(raw.eps > 0.0 && raw.eps < eps0) {
            return Err(Error::Config(format!(
                "eps = {} must lie in (0, {eps0}) = (0, min(alpha*gamma/4, eps_prime))",
                raw.eps
            )));
        }
        let ell_prime = raw.ell_prime.unwrap_or(raw.ell);
        if !(raw.ell > 1.0 && ell_prime > 1.0) {
            return Err(Error::Config("ell and ell_prime must exceed 1".into()));
        }
        if raw.seeds < 1 || raw.n_steps < 1 || raw.l < 1 || raw.good_horizon < 1 {
            return Err(Error::Config("seeds, n_steps, L and good_horizon must be positive".into()));
        }
        if !(raw.beta > 0.0) {
            return Err(Error::Config("beta must be positive".into()));
        }
        let sigma = raw.sigma.unwrap_or(4.0 * raw.eps / (alpha * gamma));
        if !(sigma > 0.0) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        Ok(ExperimentConfig {
            base,
            cocycles,
            eps: raw.eps,
            eps_prime,
            ell: raw.ell,
            ell_prime,
            sigma,
            alpha,
            gamma,
            k_max: raw.k_max,
            n_steps: raw.n_steps,
            seeds: raw.seeds,
            l: raw.l,
            beta: raw.beta,
            rng_seed: raw.rng_seed,
            output_dir: raw.output_dir,
            closed_per_k: raw.closed_per_k,
            good_horizon: raw.good_horizon,
            good_points: raw.good_points,
            n_floor: raw.n_floor.unwrap_or(raw.k_max),
            n_trunc: raw.n_trunc.unwrap_or_else(|| crate::pesin::default_truncation(raw.eps)),
            samples: raw.samples.max(1),
        })
    }

    /// The reference point every run starts from, drawn from the canonical
    /// measure with `rng_seed`.
    pub fn start_point(&self) -> Point {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let horizon = self.n_steps.max(self.good_horizon) * 3;
        self.base.random_point(&mut rng, horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAT: &str = r#"{"kind": "toral", "matrix": [[2, 1], [1, 1]]}"#;

    fn cfg(body: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(&format!(r#"{{"base": {CAT}, {body}}}"#))
    }

    #[test]
    fn parses_defaults() {
        let c = cfg(r#""cocycles": [{"family": "diag_rotation", "params": {"exponents": [0.7, -0.7]}}], "eps": 0.05"#)
            .unwrap();
        assert_eq!(c.cocycles[0].spec.dim, 2);
        assert!((c.sigma - 4.0 * 0.05 / c.gamma).abs() < 1e-15);
        assert_eq!(c.ell_prime, c.ell);
        assert_eq!(c.n_floor, c.k_max);
    }

    #[test]
    fn rejects_bad_input() {
        let diag = r#""cocycles": [{"family": "diagonal", "params": {"values": [2.0, 0.5]}}]"#;
        assert!(matches!(cfg(&format!("{diag}, \"eps\": 0.5")), Err(Error::Config(_))));
        assert!(matches!(cfg(&format!("{diag}, \"eps\": 0.05, \"eps_prime\": 0.01")), Err(Error::Config(_))));
        assert!(matches!(cfg(&format!("{diag}, \"eps\": 0.05, \"ell\": 1.0")), Err(Error::Config(_))));
        assert!(matches!(cfg(&format!("{diag}, \"eps\": 0.05, \"seeds\": 0")), Err(Error::Config(_))));
        assert!(matches!(cfg(&format!("{diag}, \"eps\": 0.05, \"bogus\": 1")), Err(Error::Config(_))));
        assert!(matches!(cfg(r#""cocycles": [], "eps": 0.05"#), Err(Error::Config(_))));
        assert!(matches!(
            cfg(r#""cocycles": [{"family": "diagonal", "dim": 3, "params": {"values": [2.0, 0.5]}}], "eps": 0.05"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            cfg(r#""cocycles": [{"family": "diag_rotation", "params": {"exponents": [1, -1], "freq": [1]}}], "eps": 0.05"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"base": {"kind": "shift", "alphabet": 2}, "cocycles": [{"family": "derivative"}], "eps": 0.05}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn nested_exterior() {
        let c = cfg(r#""cocycles": [{"family": "exterior", "params": {"order": 2,
            "inner": {"family": "diagonal", "params": {"values": [2.0, 1.0, 0.5]}}}}], "eps": 0.05"#)
        .unwrap();
        assert_eq!(c.cocycles[0].spec.dim, 3);
    }
}
