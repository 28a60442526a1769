use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("spectral density evaluated at its removable singularity omega = {omega}")]
    RemovableSingularity { omega: f64 },

    #[error(
        "spectral peaks unresolved: separation {separation} does not exceed {factor} x total width {width}"
    )]
    PeaksUnresolved { separation: f64, width: f64, factor: f64 },

    #[error("trace drifted by {drift:e} at t = {time}")]
    TraceDrift { time: f64, drift: f64 },

    #[error("density matrix lost positivity (min eigenvalue {min_eigenvalue:e}) at t = {time}")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },

    #[error("integration unstable: norm grew to {norm} at t = {time}")]
    Instability { time: f64, norm: f64 },

    #[error("state norm drifted by {drift:e} at t = {time}")]
    NormDrift { time: f64, drift: f64 },

    #[error("density matrix is not X-form: off-X magnitude {leak:e}")]
    NotXForm { leak: f64 },

    #[error("state left the single-excitation sector: rho11 = {rho11:e}")]
    SectorViolation { rho11: f64 },

    #[error("not converged: deviation {deviation:e} between the two largest cutoffs")]
    NotConverged { deviation: f64 },

    #[error("Hilbert space dimension {dim} exceeds limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("quadratic form is not positive definite (Schur complement {schur:e})")]
    NonPositiveDefinite { schur: f64 },
}

impl Error {
    /// Failures that signal a convergence problem rather than bad input or a
    /// numerical breakdown.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::NotConverged { .. })
    }

    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } | Error::InvalidIndex(_)
        )
    }
}
