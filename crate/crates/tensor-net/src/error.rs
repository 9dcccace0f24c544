use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorNetError {
    #[error("shape mismatch at layer {layer}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        layer: usize,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("non-finite {what} in layer {layer}")]
    NonFinite { layer: usize, what: &'static str },

    #[error("stale or mismatched activations: {0}")]
    StaleActivations(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("container format mismatch: expected {expected}, found {found}")]
    ContainerFormat { expected: String, found: String },

    #[error("container version mismatch: expected {expected}, found {found}")]
    ContainerVersion { expected: u32, found: u32 },

    #[error("container kind mismatch: expected {expected}, found {found}")]
    ContainerKind { expected: String, found: String },

    #[error("container checksum mismatch in {path}")]
    ContainerChecksum { path: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TensorNetError>;
