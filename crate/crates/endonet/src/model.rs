//! Architecture assembly, input standardization, feature extraction, and
//! model persistence.
//!
//! The backbone ends in the fc7-analog activation (width F). The tool head
//! `fc_tool` maps fc7 to 7 logits; `fc8` concatenates fc7 with those logits
//! (width F + 7) and feeds the phase head `fc_phase`. Head layers carry a
//! 10x learning-rate multiplier because they start from random
//! initialization while the backbone is transferred.

use serde::{Deserialize, Serialize};
use std::path::Path;

use tensor_net::{container, LayerKind, LayerSpec, NetworkSpec, NetworkState, Tensor};

use crate::error::{EndoNetError, Result};
use crate::types::{Fc8Feature, LossWeights, PhaseLogits, ToolConfidence, N_PHASES, N_TOOLS};

pub const MODEL_KIND: &str = "endonet-model";
pub const MODEL_VERSION: u32 = 1;

/// Layer names the rest of the crate keys on.
pub const FC7: &str = "relu7";
pub const FC_TOOL: &str = "fc_tool";
pub const FC8: &str = "fc8";
pub const FC_PHASE: &str = "fc_phase";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndoNetConfig {
    /// `[dim]` for feature observations, `[channels, height, width]` for
    /// rendered tiles.
    pub input_shape: Vec<usize>,
    /// Width F of the fc7-analog feature.
    pub feature_width: usize,
    /// Width of the fc6-analog layer.
    pub hidden_width: usize,
    /// Channels of the two convolution layers (image inputs only).
    pub conv_channels: (usize, usize),
    /// Learning-rate multiplier for the randomly initialized heads.
    pub head_lr_mult: f64,
}

impl EndoNetConfig {
    pub fn for_features(dim: usize) -> Self {
        EndoNetConfig {
            input_shape: vec![dim],
            feature_width: 64,
            hidden_width: 48,
            conv_channels: (8, 16),
            head_lr_mult: 10.0,
        }
    }

    pub fn for_images(channels: usize, height: usize, width: usize) -> Self {
        EndoNetConfig {
            input_shape: vec![channels, height, width],
            feature_width: 64,
            hidden_width: 96,
            conv_channels: (8, 16),
            head_lr_mult: 10.0,
        }
    }

    /// Backbone layers up to and including the fc7-analog activation.
    pub fn backbone_spec(&self) -> NetworkSpec {
        let mut layers = Vec::new();
        if self.input_shape.len() == 3 {
            layers.push(LayerSpec::new(
                "conv1",
                LayerKind::Conv {
                    out_channels: self.conv_channels.0,
                    kernel: (5, 5),
                    stride: (2, 2),
                },
            ));
            layers.push(LayerSpec::new("relu1", LayerKind::Relu));
            layers.push(LayerSpec::new(
                "conv2",
                LayerKind::Conv {
                    out_channels: self.conv_channels.1,
                    kernel: (3, 3),
                    stride: (1, 1),
                },
            ));
            layers.push(LayerSpec::new("relu2", LayerKind::Relu));
            layers.push(LayerSpec::new(
                "pool",
                LayerKind::MaxPool {
                    kernel: (2, 2),
                    stride: (2, 2),
                },
            ));
        }
        layers.push(LayerSpec::new(
            "fc6",
            LayerKind::Dense {
                width: self.hidden_width,
            },
        ));
        layers.push(LayerSpec::new("relu6", LayerKind::Relu));
        layers.push(LayerSpec::new(
            "fc7",
            LayerKind::Dense {
                width: self.feature_width,
            },
        ));
        layers.push(LayerSpec::new(FC7, LayerKind::Relu));
        NetworkSpec {
            input_shape: self.input_shape.clone(),
            layers,
        }
    }

    /// Full two-head spec: backbone + fc_tool + fc8 (concat) + fc_phase.
    pub fn full_spec(&self) -> NetworkSpec {
        let mut spec = self.backbone_spec();
        let fc7_index = spec.layers.len() - 1;
        spec.layers.push(
            LayerSpec::new(FC_TOOL, LayerKind::Dense { width: N_TOOLS })
                .with_lr_mult(self.head_lr_mult),
        );
        spec.layers
            .push(LayerSpec::new(FC8, LayerKind::Concat { with: fc7_index }));
        spec.layers.push(
            LayerSpec::new(FC_PHASE, LayerKind::Dense { width: N_PHASES })
                .with_lr_mult(self.head_lr_mult),
        );
        spec
    }
}

/// Per-channel (image) or per-dimension (feature vector) standardization,
/// fitted on the training corpus and applied before every forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Identity transform (used before statistics are available).
    pub fn identity(channels: usize) -> Self {
        Standardization {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    fn channels_of(shape: &[usize]) -> usize {
        shape[0]
    }

    fn channel_size(shape: &[usize]) -> usize {
        shape.iter().skip(1).product::<usize>().max(1)
    }

    /// Fits per-channel moments over all observations.
    pub fn fit<'a, I>(observations: I, shape: &[usize]) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let channels = Self::channels_of(shape);
        let csize = Self::channel_size(shape);
        let mut sum = vec![0.0; channels];
        let mut sq = vec![0.0; channels];
        let mut count = vec![0usize; channels];
        for obs in observations {
            for c in 0..channels {
                for &v in &obs[c * csize..(c + 1) * csize] {
                    sum[c] += v;
                    sq[c] += v * v;
                    count[c] += 1;
                }
            }
        }
        let mut mean = vec![0.0; channels];
        let mut std = vec![1.0; channels];
        for c in 0..channels {
            if count[c] > 0 {
                let n = count[c] as f64;
                mean[c] = sum[c] / n;
                std[c] = (sq[c] / n - mean[c] * mean[c]).max(0.0).sqrt().max(1e-9);
            }
        }
        Standardization { mean, std }
    }

    pub fn apply(&self, observation: &[f64], shape: &[usize]) -> Vec<f64> {
        let channels = Self::channels_of(shape);
        let csize = Self::channel_size(shape);
        let mut out = Vec::with_capacity(observation.len());
        for c in 0..channels {
            for &v in &observation[c * csize..(c + 1) * csize] {
                out.push((v - self.mean[c]) / self.std[c]);
            }
        }
        out
    }
}

/// A trained two-head model plus everything needed to reproduce its inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndoNetModel {
    pub net: NetworkState,
    pub feature_width: usize,
    /// Loss weights the model was fine-tuned with (part of the header).
    pub loss_weights: LossWeights,
    pub standardization: Standardization,
}

impl EndoNetModel {
    fn layer(&self, name: &'static str) -> Result<usize> {
        self.net
            .spec()
            .layer_index(name)
            .ok_or(EndoNetError::MissingHead(name))
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.net.spec().input_shape
    }

    fn prepare(&self, observation: &[f64]) -> Result<Tensor> {
        let shape = self.input_shape().to_vec();
        let expected: usize = shape.iter().product();
        if observation.len() != expected {
            return Err(EndoNetError::ObservationShape {
                expected,
                actual: observation.len(),
            });
        }
        let standardized = self.standardization.apply(observation, &shape);
        Ok(Tensor::from_vec(&shape, standardized)?)
    }

    /// Runs the model on one raw observation and returns the concatenated
    /// feature, the tool logits, and the phase logits. The feature's last 7
    /// entries equal the tool logits exactly.
    pub fn extract(&self, observation: &[f64]) -> Result<(Fc8Feature, ToolConfidence, PhaseLogits)> {
        let fc8 = self.layer(FC8)?;
        let fc_tool = self.layer(FC_TOOL)?;
        let fc_phase = self.layer(FC_PHASE)?;
        let input = self.prepare(observation)?;
        let acts = self.net.forward(&input)?;

        let feature = Fc8Feature::new(self.feature_width, acts.outputs[fc8].data().to_vec())?;
        let mut tools = [0.0; N_TOOLS];
        tools.copy_from_slice(acts.outputs[fc_tool].data());
        let mut phases = [0.0; N_PHASES];
        phases.copy_from_slice(acts.outputs[fc_phase].data());
        Ok((feature, ToolConfidence(tools), PhaseLogits(phases)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        container::save(path, MODEL_KIND, MODEL_VERSION, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut model: EndoNetModel = container::load(path, MODEL_KIND, MODEL_VERSION)?;
        model.net.reset_buffers();
        // A persisted model must expose both heads.
        model.layer(FC_TOOL)?;
        model.layer(FC_PHASE)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_mode_spec_resolves_with_the_expected_widths() {
        let config = EndoNetConfig::for_features(16);
        let spec = config.full_spec();
        let shapes = spec.resolve_shapes().unwrap();
        // fc8 is the second-to-last layer: width F + 7.
        assert_eq!(shapes[shapes.len() - 2], vec![64 + 7]);
        assert_eq!(shapes[shapes.len() - 1], vec![7]);
    }

    #[test]
    fn image_mode_spec_resolves() {
        let config = EndoNetConfig::for_images(3, 32, 32);
        let spec = config.full_spec();
        let shapes = spec.resolve_shapes().unwrap();
        assert_eq!(shapes.last().unwrap(), &vec![7]);
    }

    #[test]
    fn standardization_centers_each_channel() {
        let shape = [2usize, 1, 2];
        let obs = vec![
            vec![1.0, 3.0, 10.0, 14.0],
            vec![-1.0, -3.0, 8.0, 16.0],
        ];
        let s = Standardization::fit(obs.iter().map(|o| o.as_slice()), &shape);
        assert!((s.mean[0] - 0.0).abs() < 1e-12);
        assert!((s.mean[1] - 12.0).abs() < 1e-12);
        let out = s.apply(&obs[0], &shape);
        assert!(out[0].abs() < 1.0);
    }
}
