use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("time step {dt} too coarse; need dt <= {required}")]
    StepTooCoarse { dt: f64, required: f64 },

    #[error("initial state not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("window too short: {0}")]
    WindowTooShort(String),

    #[error("series is not uniformly sampled")]
    NonUniform,

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("norm drift {drift:e} at t = {t} exceeds tolerance {tol:e}")]
    NormDrift { t: f64, drift: f64, tol: f64 },

    #[error("Fock-space leakage {leakage:e} at t = {t} exceeds tolerance {tol:e}")]
    Leakage { t: f64, leakage: f64, tol: f64 },

    #[error("photon window too narrow: captured probability {captured}")]
    WindowTooNarrow { captured: f64 },

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("Krylov propagator did not converge (residual {residual:e}); reduce dt below {suggested}")]
    KrylovNotConverged { residual: f64, suggested: f64 },
}

impl Error {
    /// True for failures of the numerical invariants (norm or leakage breach),
    /// as opposed to bad input.
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. } | Error::Leakage { .. } | Error::KrylovNotConverged { .. }
        )
    }
}
