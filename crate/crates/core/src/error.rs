use thiserror::Error;

/// Errors raised across the fitting and sensitivity pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value left the domain where a transform or formula is defined.
    #[error("domain error for `{name}`: {reason}")]
    Domain { name: String, reason: String },

    /// A non-finite intermediate or failed integration inside a model.
    #[error("numeric error in {context}: {reason}")]
    Numeric { context: String, reason: String },

    /// Model output unusable under the chosen noise scheme.
    #[error("model output error: {0}")]
    ModelOutput(String),

    /// Likelihood undefined at the requested parameters.
    #[error("likelihood error: {0}")]
    Likelihood(String),

    /// Invalid construction of a parameter set, dataset, prior or config.
    #[error("validation error: {0}")]
    Validation(String),

    /// Matrix factorisation or decomposition failure.
    #[error("matrix error: {0}")]
    Matrix(String),

    /// Covariance too ill-conditioned to invert.
    #[error(
        "sample covariance is singular or ill-conditioned (condition number {condition:.3e}); \
         draw more particles or remove unidentifiable parameters"
    )]
    Singular { condition: f64 },

    /// Optimizer exhausted its evaluation budget.
    #[error("optimization did not converge after {evaluations} evaluations (best cost {best_cost})")]
    NotConverged {
        evaluations: usize,
        best_cost: f64,
        best_point: Vec<f64>,
    },

    /// Sampler could not proceed.
    #[error("degenerate sampler state: {0}")]
    Degenerate(String),

    /// Metropolis–Hastings moves failed to accept anything in the pilot cycle.
    #[error("move failure at temperature {temperature}: pilot acceptance rate was zero")]
    MoveFailure { temperature: f64 },

    /// A finite-difference stencil point could not be evaluated.
    #[error("finite-difference stencil failed at {point:?}: {reason}")]
    Stencil { point: Vec<f64>, reason: String },

    /// Eigenvector with every loading below the retention threshold.
    #[error("eigenvector {rank} has no loading above the threshold {threshold}")]
    EmptyEigenparameter { rank: usize, threshold: f64 },

    /// Input file could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(String),

    /// Pipeline stage failure wrapping the underlying cause.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Domain {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numeric(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            reason: reason.into(),
        }
    }

    /// Strips any `Stage` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Validation(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
