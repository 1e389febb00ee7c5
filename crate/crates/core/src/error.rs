use thiserror::Error;

/// Errors raised by kernel evaluation, sampling and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("truncation budget exceeded: {needed} terms required, policy allows {allowed}")]
    TruncationBudget { needed: usize, allowed: usize },

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("rejection budget exceeded after {attempts} attempts ({context})")]
    RejectionBudget { attempts: usize, context: String },

    #[error("ambiguous lift at step {step}: base displacement {displacement} is not below half the shortest period {half_period}")]
    AmbiguousLift {
        step: usize,
        displacement: f64,
        half_period: f64,
    },

    #[error("potential bound violated: |V(x)| = {value} exceeds declared sup bound {bound}")]
    PotentialBound { value: f64, bound: f64 },

    #[error("potential ordering violated: V1(x) = {first} > V2(x) = {second}")]
    PotentialOrdering { first: f64, second: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Numerical failures (as opposed to bad inputs).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::TruncationBudget { .. }
                | Error::QuadratureNonConvergence(_)
                | Error::Divergent(_)
                | Error::RejectionBudget { .. }
                | Error::Eigen(_)
        )
    }

    /// Short machine-readable tag used in JSON error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Domain(_) => "domain",
            Error::UnsupportedModel(_) => "unsupported_model",
            Error::TruncationBudget { .. } => "truncation_budget",
            Error::QuadratureNonConvergence(_) => "quadrature_non_convergence",
            Error::Divergent(_) => "divergent",
            Error::RejectionBudget { .. } => "rejection_budget",
            Error::AmbiguousLift { .. } => "ambiguous_lift",
            Error::PotentialBound { .. } => "potential_bound",
            Error::PotentialOrdering { .. } => "potential_ordering",
            Error::Eigen(_) => "eigen",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
