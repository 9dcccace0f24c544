use thiserror::Error;

#[derive(Debug, Error)]
pub enum EndoNetError {
    #[error("empty batch")]
    EmptyBatch,

    #[error("batch length mismatch: {left} logits vs {right} targets")]
    BatchMismatch { left: usize, right: usize },

    #[error("target is not one-hot: {0}")]
    NotOneHot(String),

    #[error("invalid loss weights: {0}")]
    BadWeights(String),

    #[error("non-finite loss value")]
    NonFiniteLoss,

    #[error("training diverged (non-finite loss) at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("model has no {0} head")]
    MissingHead(&'static str),

    #[error("observation length {actual} does not match the input shape ({expected})")]
    ObservationShape { expected: usize, actual: usize },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error(transparent)]
    Net(#[from] tensor_net::TensorNetError),
}

pub type Result<T> = std::result::Result<T, EndoNetError>;
