use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{operation} needs {needs}, got alpha = {alpha}")]
    Regime {
        operation: &'static str,
        needs: &'static str,
        alpha: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("convergence gate failed: {0}")]
    ConvergenceGate(String),

    #[error("incompatible velocity basis: {0}")]
    IncompatibleBasis(String),

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("window [{lo}, {hi}] is not covered by trace samples on [{first}, {last}]")]
    WindowOutOfRange {
        lo: f64,
        hi: f64,
        first: f64,
        last: f64,
    },

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("trace data integrity: {0}")]
    DataIntegrity(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Regime { .. }
            | Error::Domain(_)
            | Error::IncompatibleBasis(_)
            | Error::WindowOutOfRange { .. }
            | Error::OutOfRange(_)
            | Error::Missing(_)
            | Error::Config(_) => 2,
            Error::Io(_) | Error::Json(_) => 2,
            Error::QuadratureFailure(_)
            | Error::EigenFailure(_)
            | Error::ConvergenceGate(_)
            | Error::IntegrationFailure { .. }
            | Error::DegenerateWindow(_)
            | Error::DataIntegrity(_)
            | Error::Internal(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Regime { .. } => "regime-error",
            Error::Domain(_) => "domain-error",
            Error::QuadratureFailure(_) => "quadrature-failure",
            Error::EigenFailure(_) => "eigen-failure",
            Error::ConvergenceGate(_) => "convergence-gate",
            Error::IncompatibleBasis(_) => "incompatible-basis",
            Error::IntegrationFailure { .. } => "integration-failure",
            Error::WindowOutOfRange { .. } => "window-out-of-range",
            Error::DegenerateWindow(_) => "degenerate-window",
            Error::DataIntegrity(_) => "data-integrity",
            Error::OutOfRange(_) => "out-of-range",
            Error::Missing(_) => "missing-input",
            Error::Config(_) => "config-error",
            Error::Internal(_) => "internal-error",
            Error::Io(_) => "io-error",
            Error::Json(_) => "json-error",
        }
    }
}
