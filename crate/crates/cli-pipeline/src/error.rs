use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dataset validation failed with {0} diagnostic(s)")]
    ValidationFailed(usize),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn stage<E>(stage: &'static str) -> impl FnOnce(E) -> PipelineError
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        move |e| PipelineError::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
