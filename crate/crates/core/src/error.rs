use thiserror::Error;

pub type Result<T> = std::result::Result<T, BlendError>;

#[derive(Debug, Error)]
pub enum BlendError {
    #[error("unknown {kind} `{id}`")]
    Lookup { kind: &'static str, id: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid instance: {0}")]
    Validation(String),

    #[error("{file}: row {row}, column `{column}`: {message}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("penalty search failed: {0}")]
    SearchFailure(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BlendError {
    /// Process exit code for the error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            BlendError::Parse { .. } | BlendError::Io(_) => 2,
            BlendError::Validation(_)
            | BlendError::Argument(_)
            | BlendError::Domain(_)
            | BlendError::Lookup { .. } => 3,
            BlendError::Solver(_)
            | BlendError::Resource(_)
            | BlendError::SearchFailure(_)
            | BlendError::Verification(_) => 4,
        }
    }
}
