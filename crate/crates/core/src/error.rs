use thiserror::Error;

/// Errors raised across the library. Variants map onto the CLI exit codes in
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("M^k - I is singular for k = {k}")]
    SingularClose { k: u64 },

    #[error("period must be positive")]
    BadPeriod,

    #[error("enumeration needs {required} points, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("matrix entries exceed {limit:e} after {steps} steps")]
    Overflow { steps: usize, limit: f64 },

    #[error("degenerate orbit: R diagonal vanished at step {step}")]
    DegenerateOrbit { step: usize },

    #[error("point is not periodic with period {k} (defect {defect:e})")]
    NotPeriodic { k: u64, defect: f64 },

    #[error("cannot separate Lyapunov exponents: {0}")]
    ClusterError(String),

    #[error("series tail {tail:e} exceeds 1e-6 of leading term {leading:e}; raise the truncation")]
    TailTooLarge { tail: f64, leading: f64 },

    #[error("only one Lyapunov exponent, cone argument is vacuous")]
    NoSplitting,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("no return below beta = {beta} within the search caps")]
    NoReturn { beta: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::BadPeriod => 2,
            Error::CapExceeded { .. } | Error::NoReturn { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
