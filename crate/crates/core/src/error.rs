use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {kind}: {shapes:?}")]
    ShapeMismatch {
        kind: &'static str,
        shapes: Vec<Vec<usize>>,
    },
    #[error("unknown primitive kind `{0}`")]
    UnknownKind(String),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("invalid attribute for {kind}: {detail}")]
    InvalidAttr { kind: &'static str, detail: String },
    #[error("loss node must be scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config key `{key}`: {detail}")]
    Config { key: String, detail: String },
    #[error("training diverged: {0}")]
    Diverged(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
