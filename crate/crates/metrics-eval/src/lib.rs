//! Evaluation machinery for workflow recognition: average precision over
//! per-frame tool confidences, per-phase precision/recall and accuracy,
//! phase-boundary tolerance tables, and tool-block detection statistics.

mod ap;
mod blocks;
mod boundary;
mod error;
mod phase;
mod report;

pub use ap::{average_precision, pr_curve, select_threshold, PrPoint};
pub use blocks::{
    block_detection_report, tool_blocks, BlockDetectionReport, ToolBlock, LATENCY_EDGES,
};
pub use boundary::{boundary_errors, BoundaryTable, DEFAULT_TOLERANCES};
pub use error::{MetricsError, Result};
pub use phase::{phase_scores, PhaseMetric, PhaseScores};
pub use report::{mean_std, ribbon_tsv, EvalReport};
