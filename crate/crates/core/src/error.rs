use thiserror::Error;

pub type Result<T> = std::result::Result<T, L2gError>;

#[derive(Debug, Error)]
pub enum L2gError {
    /// A caller broke a documented precondition (shape, dimension, range).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("format error in field `{field}`: {reason}")]
    Format { field: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("no eligible patch under mask{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    EmptySelection { context: Option<String> },

    #[error("mask covers no eligible patch")]
    EmptyRegion,

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("gradient oracle produced a non-finite value at coordinate {0}")]
    Oracle(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl L2gError {
    pub fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        L2gError::Format { field: field.into(), reason: reason.into() }
    }

    /// Process exit code: 2 for configuration problems, 3 for bad inputs or
    /// files, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            L2gError::Config(_) | L2gError::UnknownInstance(_) => 2,
            L2gError::Input(_)
            | L2gError::Format { .. }
            | L2gError::Io(_)
            | L2gError::Image(_)
            | L2gError::Json(_) => 3,
            _ => 1,
        }
    }
}
