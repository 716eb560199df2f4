use thiserror::Error;

use crate::constitutive::ValidationReport;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Convergence,
    Physics,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Convergence => 3,
            ErrorClass::Physics => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("material validation failed: {0}")]
    Validation(ValidationReport),

    #[error("singular metric: {0}")]
    SingularMetric(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigenproblem failed: {0}")]
    Eigenproblem(String),

    #[error("magnetoelectric coupling (eps2/mu1 != 0) is not supported by the mode solver")]
    MagnetoelectricUnsupported,

    #[error("zero wavevector: {0}")]
    ZeroWavevector(&'static str),

    #[error("phase speed is undefined for the longitudinal zero-frequency branch")]
    LongitudinalBranch,

    #[error("radial pole location failed: {0}")]
    PoleLocation(String),

    #[error("ill-conditioned second-derivative system (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("singular local-field transfer matrix Q (condition number {condition:.3e})")]
    SingularQ { condition: f64 },

    #[error("{what} did not converge (error estimate {estimate:.3e})")]
    Convergence { what: String, estimate: f64 },

    #[error("integration unstable: norm drift {drift:.3e} exceeds {limit:.1e}")]
    Stability { drift: f64, limit: f64 },

    #[error("time step too large: dt * max|detuning| = {product:.3e}, must stay below {limit}")]
    StepTooLarge { product: f64, limit: f64 },

    #[error("amplitude underflow: |c| = {value:.3e} at t = {time:.3e} s inside the fit window")]
    Underflow { value: f64, time: f64 },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::Io { .. }
            | Error::ZeroWavevector(_) => ErrorClass::Config,
            Error::PoleLocation(_)
            | Error::IllConditioned { .. }
            | Error::SingularQ { .. }
            | Error::Convergence { .. }
            | Error::Stability { .. }
            | Error::StepTooLarge { .. }
            | Error::Underflow { .. } => ErrorClass::Convergence,
            Error::Validation(_)
            | Error::SingularMetric(_)
            | Error::Factorization(_)
            | Error::Eigenproblem(_)
            | Error::MagnetoelectricUnsupported
            | Error::LongitudinalBranch => ErrorClass::Physics,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
