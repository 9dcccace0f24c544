//! Multi-task workflow model: a shared backbone with a tool-presence head
//! and a phase head over the concatenated fc8 feature, the two task losses
//! and their weighted sum, proxy pre-training and fine-tuning loops, and
//! feature/confidence extraction.

mod error;
mod loss;
mod model;
mod train;
mod types;

pub use error::{EndoNetError, Result};
pub use loss::{
    phase_loss, phase_loss_with_grads, softmax_ce, tool_loss, tool_loss_with_grads, total_loss,
};
pub use model::{
    EndoNetConfig, EndoNetModel, Standardization, FC7, FC8, FC_PHASE, FC_TOOL, MODEL_KIND,
    MODEL_VERSION,
};
pub use train::{
    default_schedule, finetune, loss_log_text, pretrain, windowed_means, LossRecord, ProxyTask,
    TrainFrame,
};
pub use types::{
    Fc8Feature, LossWeights, PhaseLogits, PhaseTarget, ToolConfidence, ToolTarget, N_PHASES,
    N_TOOLS,
};
