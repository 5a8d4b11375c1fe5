use thiserror::Error;

/// Errors raised by the algebra kernel, the vector fields and the integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension n = {0} (must lie in 2..=16)")]
    UnsupportedDimension(usize),

    #[error("matrix is not skew-symmetric (defect {0:.3e})")]
    NotSkew(f64),

    #[error("matrix is not a rotation (orthogonality defect {defect:.3e}, det {det:.6})")]
    NotRotation { defect: f64, det: f64 },

    #[error("operator is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),

    #[error("operator is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("right-hand side lies outside the image of ad_x (residual {0:.3e})")]
    OutsideImage(f64),

    #[error("{what} violated (defect {defect:.3e})")]
    Constraint { what: &'static str, defect: f64 },

    #[error("spectral fit residual {0:.3e}: state is off the invariant set")]
    FitResidual(f64),

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
