use thiserror::Error;

/// Errors produced by the optimization and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("{stage} diverged at iteration {iteration}: non-finite value")]
    Divergence { stage: &'static str, iteration: usize },

    #[error("{stage} did not converge within {max_iter} iterations (residual {residual:.3e})")]
    NotConverged {
        stage: &'static str,
        max_iter: usize,
        residual: f64,
    },

    #[error("degenerate power model: total consumed power is zero")]
    DegeneratePowerModel,

    #[error("outer iteration {iteration}: {source}")]
    Outer {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
