use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("column {0} is constant and cannot be standardized")]
    ConstantColumn(usize),

    #[error("no coefficient vector satisfies the constraints (residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("solver did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("returned solution failed its optimality certificate (feasibility {feasibility:.3e}, dual {dual:.3e}, gap {gap:.3e})")]
    CertificateRejected { feasibility: f64, dual: f64, gap: f64 },

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("noise dictionaries absorbed too little: {nonzero} nonzero coefficients, or zero spread")]
    DegenerateNoiseFit { nonzero: usize },

    #[error("{failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("GEV fit failed: {0}")]
    FitFailed(&'static str),

    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("Gram matrix of the support columns is singular")]
    SingularGram,

    #[error("no exact solution with at most {k_max} nonzeros")]
    NotFound { k_max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
