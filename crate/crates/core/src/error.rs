use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EqeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("{what} did not converge after {terms} terms")]
    SeriesDivergence { what: &'static str, terms: usize },

    #[error("quadrature did not converge after {evaluations} evaluations (best estimate {estimate:e}, error estimate {error:e})")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("infeasible moments: {0}")]
    Infeasible(String),

    #[error("fit did not converge after {iterations} iterations (residuals {residual:?})")]
    FitDivergence {
        iterations: usize,
        residual: (f64, f64),
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<EqeError>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl EqeError {
    pub fn context(self, context: impl Into<String>) -> Self {
        EqeError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers removed.
    pub fn root(&self) -> &EqeError {
        match self {
            EqeError::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of a numerical scheme (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            EqeError::SeriesDivergence { .. }
                | EqeError::Quadrature { .. }
                | EqeError::FitDivergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, EqeError>;
