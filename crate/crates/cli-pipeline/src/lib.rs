//! Orchestration of the full recognition pipeline: configuration,
//! dataset generation and validation, staged training with resumable
//! artifacts, offline/online evaluation, and multi-run aggregation.

pub mod config;
mod error;
pub mod pipeline;
pub mod variants;

pub use config::ExperimentConfig;
pub use error::{PipelineError, Result};
pub use pipeline::{
    decode_video, evaluate_run, generate_dataset, load_dataset, rerender_aggregate,
    run_experiment, train_run, write_aggregate, ExperimentOutcome, RunArtifacts, TrainedRun,
};
pub use variants::{feature_variants, VariantScores, VARIANT_NAMES};
