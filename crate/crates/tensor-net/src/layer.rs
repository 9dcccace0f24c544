//! Layer specifications and static shape inference.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorNetError};

/// The supported layer kinds. Spatial layers expect `[channels, height,
/// width]` inputs; `Dense` flattens whatever it receives; `Concat` flattens
/// and prepends the output of an earlier layer (a skip connection), which is
/// how the fc8-style feature concatenation is expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerKind {
    Conv {
        out_channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
    },
    MaxPool {
        kernel: (usize, usize),
        stride: (usize, usize),
    },
    Dense {
        width: usize,
    },
    Relu,
    Sigmoid,
    Softmax,
    /// Output = flatten(activation of layer `with`) ++ flatten(input).
    Concat {
        with: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// Per-layer learning-rate multiplier, > 0.
    pub lr_mult: f64,
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, kind: LayerKind) -> Self {
        LayerSpec {
            name: name.into(),
            kind,
            lr_mult: 1.0,
        }
    }

    pub fn with_lr_mult(mut self, lr_mult: f64) -> Self {
        self.lr_mult = lr_mult;
        self
    }
}

fn conv_extent(input: usize, kernel: usize, stride: usize) -> Option<usize> {
    if kernel == 0 || stride == 0 || kernel > input {
        return None;
    }
    Some((input - kernel) / stride + 1)
}

/// Computes the output shape of layer `index`, given its input shape and the
/// output shapes of all earlier layers (needed by `Concat`).
pub fn output_shape(
    spec: &LayerSpec,
    index: usize,
    input_shape: &[usize],
    earlier: &[Vec<usize>],
) -> Result<Vec<usize>> {
    let invalid = |msg: String| TensorNetError::InvalidSpec(format!("layer {index} ({msg})"));
    match spec.kind {
        LayerKind::Conv {
            out_channels,
            kernel,
            stride,
        } => {
            let &[_, h, w] = input_shape else {
                return Err(invalid(format!(
                    "conv expects [C,H,W] input, got {input_shape:?}"
                )));
            };
            if out_channels == 0 {
                return Err(invalid("conv needs out_channels > 0".into()));
            }
            let oh = conv_extent(h, kernel.0, stride.0)
                .ok_or_else(|| invalid(format!("conv kernel {kernel:?} does not fit {h}x{w}")))?;
            let ow = conv_extent(w, kernel.1, stride.1)
                .ok_or_else(|| invalid(format!("conv kernel {kernel:?} does not fit {h}x{w}")))?;
            Ok(vec![out_channels, oh, ow])
        }
        LayerKind::MaxPool { kernel, stride } => {
            let &[c, h, w] = input_shape else {
                return Err(invalid(format!(
                    "max-pool expects [C,H,W] input, got {input_shape:?}"
                )));
            };
            let oh = conv_extent(h, kernel.0, stride.0)
                .ok_or_else(|| invalid(format!("pool kernel {kernel:?} does not fit {h}x{w}")))?;
            let ow = conv_extent(w, kernel.1, stride.1)
                .ok_or_else(|| invalid(format!("pool kernel {kernel:?} does not fit {h}x{w}")))?;
            Ok(vec![c, oh, ow])
        }
        LayerKind::Dense { width } => {
            if width == 0 {
                return Err(invalid("dense needs width > 0".into()));
            }
            Ok(vec![width])
        }
        LayerKind::Relu | LayerKind::Sigmoid => Ok(input_shape.to_vec()),
        LayerKind::Softmax => {
            if input_shape.len() != 1 {
                return Err(invalid(format!(
                    "softmax expects a 1-D input, got {input_shape:?}"
                )));
            }
            Ok(input_shape.to_vec())
        }
        LayerKind::Concat { with } => {
            if with >= index {
                return Err(invalid(format!(
                    "concat must reference an earlier layer, got {with}"
                )));
            }
            let skip_len: usize = earlier[with].iter().product();
            let input_len: usize = input_shape.iter().product();
            Ok(vec![skip_len + input_len])
        }
    }
}

/// Shapes of the parameter tensors for a layer: `[weights, bias]` for
/// parameterized kinds, empty otherwise.
pub fn param_shapes(kind: &LayerKind, input_shape: &[usize]) -> Vec<Vec<usize>> {
    match *kind {
        LayerKind::Conv {
            out_channels,
            kernel,
            ..
        } => {
            let c = input_shape[0];
            vec![
                vec![out_channels, c, kernel.0, kernel.1],
                vec![out_channels],
            ]
        }
        LayerKind::Dense { width } => {
            let n_in: usize = input_shape.iter().product();
            vec![vec![width, n_in], vec![width]]
        }
        _ => Vec::new(),
    }
}

/// (fan_in, fan_out) for the uniform initialization scale.
pub fn fans(kind: &LayerKind, input_shape: &[usize]) -> (usize, usize) {
    match *kind {
        LayerKind::Conv {
            out_channels,
            kernel,
            ..
        } => {
            let c = input_shape[0];
            (c * kernel.0 * kernel.1, out_channels * kernel.0 * kernel.1)
        }
        LayerKind::Dense { width } => {
            let n_in: usize = input_shape.iter().product();
            (n_in, width)
        }
        _ => (1, 1),
    }
}
