use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants split into caller mistakes (a violated precondition, such as an
/// operator that is not hypoelliptic) and failures of the numerics
/// themselves; [`Error::is_precondition`] tells them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operator spectrum not positive at level m={m}, sign {sign:+}: {detail}")]
    NonPositiveSpectrum { m: usize, sign: i8, detail: String },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("solver did not converge after {iterations} iterations (worst residual {worst_residual:.3e})")]
    NotConverged {
        iterations: usize,
        worst_residual: f64,
    },

    #[error("quadrature did not reach tolerance: estimated error {error:.3e} on value {value:.6e}")]
    Quadrature { value: f64, error: f64 },

    #[error("fit needs at least {needed} eigenvalues in the window, found {found}")]
    TooFewEigenvalues { needed: usize, found: usize },
}

impl Error {
    /// True when the error reports a violated mathematical precondition
    /// rather than an internal failure.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::NonFinite(_)
                | Error::Singular(_)
                | Error::Precondition(_)
                | Error::NonPositiveSpectrum { .. }
                | Error::TooFewEigenvalues { .. }
        )
    }

    /// Short machine-readable tag for the variant.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::Singular(_) => "singular",
            Error::Precondition(_) => "precondition",
            Error::NonPositiveSpectrum { .. } => "non_positive_spectrum",
            Error::Eigen(_) => "eigen",
            Error::NotConverged { .. } => "not_converged",
            Error::Quadrature { .. } => "quadrature",
            Error::TooFewEigenvalues { .. } => "too_few_eigenvalues",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
