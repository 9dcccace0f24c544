use thiserror::Error;

#[derive(Debug, Error)]
pub enum HhmmError {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("phase label {label} out of range (< {n_phases})")]
    LabelOutOfRange { label: usize, n_phases: usize },

    #[error("mixture size {k} exceeds sample count {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("all states impossible at timestep {t}")]
    ImpossibleStep { t: usize },

    #[error(transparent)]
    Persist(#[from] tensor_net::TensorNetError),
}

pub type Result<T> = std::result::Result<T, HhmmError>;
