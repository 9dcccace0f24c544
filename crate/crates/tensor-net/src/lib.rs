//! Minimal differentiable compute core: tensors, a small set of layer kinds
//! (convolution, max-pool, dense, relu, sigmoid, softmax, concat), reverse-
//! mode gradients, step-decayed SGD with per-layer learning-rate multipliers,
//! and versioned model persistence.
//!
//! Networks are mostly sequential; the `Concat` layer kind adds the one skip
//! connection needed to express a feature that re-exports an earlier layer's
//! activation alongside a head's output.

pub mod container;
mod error;
mod layer;
mod net;
mod sgd;
mod tensor;

pub use error::{Result, TensorNetError};
pub use layer::{LayerKind, LayerSpec};
pub use net::{Activations, LayerParams, NetworkSpec, NetworkState};
pub use sgd::{sgd_step, SgdSchedule};
pub use tensor::Tensor;

/// Container kind tag for persisted networks.
pub const NETWORK_KIND: &str = "network";
/// Current on-disk version of persisted networks.
pub const NETWORK_VERSION: u32 = 1;

impl NetworkState {
    /// Persists the network (spec, shapes, parameters) in the versioned
    /// container format.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        container::save(path, NETWORK_KIND, NETWORK_VERSION, self)
    }

    /// Loads a network persisted by [`NetworkState::save`], rejecting files
    /// with a mismatched version or checksum.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut net: NetworkState = container::load(path, NETWORK_KIND, NETWORK_VERSION)?;
        net.spec().resolve_shapes()?;
        net.reset_buffers();
        Ok(net)
    }
}
