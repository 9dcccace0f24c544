//! Synthetic surgery corpus mirroring a 1-fps annotated video data model:
//! a phase grammar with published duration statistics, phase-conditioned
//! tool usage, per-frame observations (feature vectors or rendered tiles),
//! a versioned annotation-file format, and split/fold bookkeeping.

mod dataset;
mod error;
mod grammar;
mod observe;
mod sample;
mod split;
mod vocab;

pub use dataset::{
    read_dataset, validate_dataset, write_dataset, Dataset, Diagnostic, FrameRecord, Manifest,
    VideoAnnotations, DATASET_VERSION, FRAME_FILE_HEADER,
};
pub use error::{CorpusError, Result};
pub use grammar::PhaseGrammar;
pub use observe::{ObservationKind, ObservationModel, DEFAULT_OBSERVATION_SEED};
pub use sample::{proxy_corpus, sample_corpus, sample_surgery, ProxyCorpus};
pub use split::{make_split, CorpusSplit};
pub use vocab::{PhaseDef, PhaseVocabulary, ToolUsageProfile, N_TOOLS, TOOL_NAMES};
