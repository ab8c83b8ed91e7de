use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rho out of range: traffic intensity must be positive (rho = {rho})")]
    RhoNotPositive { rho: f64 },

    #[error("unstable: traffic intensity rho = {rho} must be below 1")]
    Unstable { rho: f64 },

    #[error("m out of range: at least one primary space is required (m = {m})")]
    MOutOfRange { m: usize },

    #[error("truncation: anti-diagonal N = {n} is not fully stored (R = {r_max})")]
    Truncation { n: usize, r_max: usize },

    #[error("truncation level R = {r_max} too small (need R >= {min})")]
    TruncationTooSmall { r_max: usize, min: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular system at row {row}: pivot {pivot:e} (pivot ratio {ratio:e})")]
    Singular { row: usize, pivot: f64, ratio: f64 },

    #[error("negative coefficient d({r}) = {value:e}; increase the truncation level")]
    NegativeCoefficient { r: usize, value: f64 },

    #[error("{context}: residual {residual:e} exceeds tolerance {tol:e}")]
    Residual {
        context: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("{context}: no convergence after {terms} terms")]
    NonConvergent { context: &'static str, terms: usize },

    #[error("quadrature: error estimate {estimate:e} above tolerance {tol:e}")]
    Quadrature { estimate: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by the caller's input rather than the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::RhoNotPositive { .. }
                | Error::Unstable { .. }
                | Error::MOutOfRange { .. }
                | Error::TruncationTooSmall { .. }
                | Error::Config(_)
                | Error::Domain(_)
                | Error::Unsupported(_)
                | Error::Parse(_)
        )
    }
}
