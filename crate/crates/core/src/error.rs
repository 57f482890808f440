use thiserror::Error;

pub type Result<T> = std::result::Result<T, UpliftError>;

#[derive(Debug, Error)]
pub enum UpliftError {
    /// A user-supplied setting is missing or out of range. `key` names it.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    Validation(String),

    #[error("shape mismatch: expected {expected} {what}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("unknown treatment arm {arm}; model has arms 0..={max_arm}")]
    UnknownArm { arm: usize, max_arm: usize },

    #[error("degenerate leaf: {0}")]
    DegenerateLeaf(String),

    #[error("metric is undefined: {0}")]
    Undefined(String),

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<UpliftError>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl UpliftError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        UpliftError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by how the program was invoked rather than by
    /// what happened while it ran.
    pub fn is_usage_error(&self) -> bool {
        match self {
            UpliftError::Config { .. }
            | UpliftError::Unsupported(_)
            | UpliftError::UnknownArm { .. } => true,
            UpliftError::Fold { source, .. } => source.is_usage_error(),
            _ => false,
        }
    }
}
