//! Two-level hierarchical HMM over workflow phases.
//!
//! The top level carries the phase transition graph learned from annotated
//! sequences; each phase owns a left-to-right chain of data-driven
//! sub-states with diagonal-covariance GMM emissions. Decoding flattens the
//! hierarchy into an equivalent plain HMM: Viterbi for offline decoding,
//! forward filtering for online decoding. Everything runs in log space.

mod error;
mod flat;
mod gmm;
mod model;
mod topology;

pub use error::{HhmmError, Result};
pub use flat::{forward, viterbi, FlatHmm, ForwardPass, StreamingFilter, ViterbiPath};
pub use gmm::{fit_gmm, fit_gmm_with, log_sum_exp, Gmm, GmmFit, VARIANCE_FLOOR};
pub use model::{
    train_hhmm, DecodeResult, Hhmm, HhmmConfig, OnlineDecoder, EMISSION_LOG_FLOOR, HHMM_KIND,
    HHMM_VERSION,
};
pub use topology::{learn_topology, PhaseTopology, DEFAULT_SMOOTHING};
