//! Declarative experiment configuration (TOML) with command-line overrides.
//! Every run echoes its fully resolved configuration next to its artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// Dataset directory (annotation files + manifest).
    pub path: PathBuf,
    /// Built-in vocabulary used when generating: "cholec80" or "endovis".
    pub vocabulary: String,
    /// Number of videos to generate.
    pub videos: usize,
    /// Duration scale applied to the vocabulary's published moments.
    pub scale: f64,
    /// "features" or "image".
    pub observations: String,
    /// Feature dimension (feature mode).
    pub feature_dim: usize,
    /// Tile extent (image mode).
    pub image_extent: usize,
    /// Fine-tuning fraction of the corpus.
    pub finetune_fraction: f64,
    /// Cross-validation folds over the evaluation subset.
    pub folds: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: PathBuf::from("data/synthetic"),
            vocabulary: "cholec80".into(),
            videos: 16,
            scale: 0.1,
            observations: "features".into(),
            feature_dim: 16,
            image_extent: 32,
            finetune_fraction: 0.5,
            folds: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Width F of the fc7-analog feature.
    pub feature_width: usize,
    pub hidden_width: usize,
    /// Combined loss weights (a, b).
    pub loss_a: f64,
    pub loss_b: f64,
    pub head_lr_mult: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            feature_width: 64,
            hidden_width: 48,
            loss_a: 1.0,
            loss_b: 1.0,
            head_lr_mult: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub enabled: bool,
    pub classes: usize,
    pub samples_per_class: usize,
    pub iterations: usize,
    pub base_rate: f64,
    pub batch_size: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            enabled: true,
            classes: 5,
            samples_per_class: 100,
            iterations: 1000,
            base_rate: 1e-2,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub base_rate: f64,
    pub decay_factor: f64,
    pub decay_period: usize,
    pub total_iterations: usize,
    pub batch_size: usize,
    pub momentum: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            base_rate: 1e-3,
            decay_factor: 0.1,
            decay_period: 2000,
            total_iterations: 5000,
            batch_size: 50,
            momentum: 0.0,
        }
    }
}

impl ScheduleConfig {
    pub fn to_schedule(&self) -> Result<tensor_net::SgdSchedule> {
        let s = tensor_net::SgdSchedule::new(
            self.base_rate,
            self.decay_factor,
            self.decay_period,
            self.total_iterations,
            self.batch_size,
        )
        .map_err(|e| PipelineError::Config(e.to_string()))?
        .with_momentum(self.momentum);
        s.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 300,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HhmmSection {
    pub gmm_components: usize,
    pub seconds_per_bottom_state: f64,
    pub max_bottom_states: usize,
    pub smoothing: f64,
    pub em_iterations: usize,
    pub em_tolerance: f64,
}

impl Default for HhmmSection {
    fn default() -> Self {
        let d = temporal_hhmm::HhmmConfig::default();
        HhmmSection {
            gmm_components: d.gmm_components,
            seconds_per_bottom_state: d.seconds_per_bottom_state,
            max_bottom_states: d.max_bottom_states,
            smoothing: d.smoothing,
            em_iterations: d.em_iterations,
            em_tolerance: d.em_tolerance,
        }
    }
}

impl HhmmSection {
    pub fn to_config(&self, seed: u64) -> temporal_hhmm::HhmmConfig {
        temporal_hhmm::HhmmConfig {
            gmm_components: self.gmm_components,
            seconds_per_bottom_state: self.seconds_per_bottom_state,
            max_bottom_states: self.max_bottom_states,
            smoothing: self.smoothing,
            em_iterations: self.em_iterations,
            em_tolerance: self.em_tolerance,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// "offline", "online", or "both".
    pub mode: String,
    pub runs: usize,
    pub seed: u64,
    /// Run artifacts directory.
    pub output: PathBuf,
    /// Pass features through the SVM stage (the default); when false the
    /// fc_phase logits feed the temporal model directly.
    pub svm_stage: bool,
    /// Also evaluate the feature-variant comparison table.
    pub feature_variants: bool,
    /// Target precision for tool-block detection thresholds.
    pub block_precision: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: "both".into(),
            runs: 1,
            seed: 0,
            output: PathBuf::from("runs/default"),
            svm_stage: true,
            feature_variants: false,
            block_precision: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub pretrain: PretrainConfig,
    pub schedule: ScheduleConfig,
    pub svm: SvmConfig,
    pub hhmm: HhmmSection,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.runs < 1 {
            return Err(PipelineError::Config("run.runs must be >= 1".into()));
        }
        if !matches!(self.run.mode.as_str(), "offline" | "online" | "both") {
            return Err(PipelineError::Config(format!(
                "run.mode must be offline|online|both, got '{}'",
                self.run.mode
            )));
        }
        if !matches!(self.dataset.observations.as_str(), "features" | "image") {
            return Err(PipelineError::Config(format!(
                "dataset.observations must be features|image, got '{}'",
                self.dataset.observations
            )));
        }
        if synth_corpus::PhaseVocabulary::by_name(&self.dataset.vocabulary).is_none() {
            return Err(PipelineError::Config(format!(
                "unknown vocabulary '{}'",
                self.dataset.vocabulary
            )));
        }
        if !(self.model.loss_a >= 0.0 && self.model.loss_b >= 0.0)
            || self.model.loss_a + self.model.loss_b <= 0.0
        {
            return Err(PipelineError::Config(
                "loss weights need a, b >= 0 and a + b > 0".into(),
            ));
        }
        self.schedule.to_schedule()?;
        Ok(())
    }

    pub fn loss_weights(&self) -> endonet::LossWeights {
        endonet::LossWeights {
            a: self.model.loss_a,
            b: self.model.loss_b,
        }
    }

    pub fn observation_kind(&self) -> synth_corpus::ObservationKind {
        if self.dataset.observations == "image" {
            synth_corpus::ObservationKind::Image {
                channels: 3,
                height: self.dataset.image_extent,
                width: self.dataset.image_extent,
            }
        } else {
            synth_corpus::ObservationKind::Features {
                dim: self.dataset.feature_dim,
            }
        }
    }

    pub fn net_config(&self) -> endonet::EndoNetConfig {
        let mut config = if self.dataset.observations == "image" {
            endonet::EndoNetConfig::for_images(
                3,
                self.dataset.image_extent,
                self.dataset.image_extent,
            )
        } else {
            endonet::EndoNetConfig::for_features(self.dataset.feature_dim)
        };
        config.feature_width = self.model.feature_width;
        config.hidden_width = self.model.hidden_width;
        config.head_lr_mult = self.model.head_lr_mult;
        config
    }

    /// Serialized resolved configuration, written next to the artifacts.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
