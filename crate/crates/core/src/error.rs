use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Nonzero path coefficients admit no topological order.
    #[error("cycle detected among variables {nodes:?}")]
    Cycle { nodes: Vec<String> },

    /// Illegal role assignment or role-pair edge.
    #[error("role error: {0}")]
    Role(String),

    #[error("error covariance is not positive semidefinite: {0}")]
    Psd(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("design matrix is rank deficient (condition estimate {ratio:e} below {threshold:e})")]
    Rank { ratio: f64, threshold: f64 },

    #[error("need more than {needed} samples for {regressors} regressors, got {n}")]
    SampleSize {
        n: usize,
        regressors: usize,
        needed: usize,
    },

    #[error("missing column: {0}")]
    MissingColumn(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no valid parameter draw after {attempts} attempts")]
    ParamSearch { attempts: usize },

    /// File content does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors raised while validating a model.
    pub fn is_model_validation(&self) -> bool {
        matches!(self, Error::Cycle { .. } | Error::Role(_) | Error::Psd(_))
    }
}
