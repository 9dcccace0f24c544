//! One-vs-all linear SVM producing the per-phase confidence vector consumed
//! by the temporal model.
//!
//! Each binary classifier minimizes the primal objective
//! `J(w, b) = 0.5 * ||w||^2 + C * mean_i hinge(y_i * (w.x_i + b))`
//! by deterministic epoch-based subgradient descent. The base step at epoch
//! `k` is `1 / (C * k)`; a step is halved until it does not increase the
//! objective, which makes the per-epoch objective non-increasing by
//! construction. Using the mean (not the sum) of the hinge terms keeps the
//! objective invariant under dataset duplication.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use tensor_net::container;

pub const SVM_KIND: &str = "svm";
pub const SVM_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("feature width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("label {label} out of range (< {n_classes})")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("degenerate training set: all frames share one class")]
    SingleClass,

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error(transparent)]
    Persist(#[from] tensor_net::TensorNetError),
}

pub type Result<T> = std::result::Result<T, SvmError>;

/// Per-class confidence scores (raw margins, no normalization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfidence(pub Vec<f64>);

impl PhaseConfidence {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Feature standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[Vec<f64>]) -> Self {
        let n = features.len() as f64;
        let dim = features[0].len();
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, &v) in mean.iter_mut().zip(f) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; dim];
        for f in features {
            for ((s, &v), &m) in std.iter_mut().zip(f).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt().max(1e-9);
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Hinge penalty weight.
    pub c: f64,
    pub epochs: usize,
    /// Standardize features with training-split statistics.
    pub standardize: bool,
    /// Fixes the data order used for subgradient accumulation.
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            c: 1.0,
            epochs: 300,
            standardize: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OvrSvmModel {
    pub n_classes: usize,
    pub feature_width: usize,
    pub c: f64,
    /// `weights[class][dim]`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub standardizer: Option<Standardizer>,
    /// Classes absent from training: their classifier is constant-negative.
    pub missing_classes: Vec<usize>,
    /// Per-class objective value per epoch (not persisted).
    #[serde(skip)]
    pub objective_traces: Vec<Vec<f64>>,
}

/// The hinge objective a binary classifier minimizes.
pub fn hinge_objective(
    features: &[Vec<f64>],
    targets: &[f64],
    w: &[f64],
    b: f64,
    c: f64,
) -> f64 {
    let m = features.len() as f64;
    let reg: f64 = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = features
        .iter()
        .zip(targets)
        .map(|(x, &y)| {
            let f: f64 = w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            (1.0 - y * f).max(0.0)
        })
        .sum();
    reg + c * hinge / m
}

fn train_binary(
    features: &[Vec<f64>],
    targets: &[f64],
    order: &[usize],
    c: f64,
    epochs: usize,
) -> (Vec<f64>, f64, Vec<f64>) {
    let dim = features[0].len();
    let m = features.len() as f64;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut trace = Vec::with_capacity(epochs);
    let mut objective = hinge_objective(features, targets, &w, b, c);

    for epoch in 1..=epochs {
        // Full-batch subgradient, accumulated in the fixed order.
        let mut gw = w.clone();
        let mut gb = 0.0;
        for &i in order {
            let x = &features[i];
            let y = targets[i];
            let f: f64 = w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            if y * f < 1.0 {
                let scale = c * y / m;
                for (g, &v) in gw.iter_mut().zip(x) {
                    *g -= scale * v;
                }
                gb -= scale;
            }
        }

        // Base step 1/(C*k), halved until the objective does not increase.
        let mut step = 1.0 / (c * epoch as f64);
        let mut accepted = false;
        for _ in 0..40 {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
            let cand_b = b - step * gb;
            let cand_obj = hinge_objective(features, targets, &cand_w, cand_b, c);
            if cand_obj <= objective {
                w = cand_w;
                b = cand_b;
                objective = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        let _ = accepted;
        trace.push(objective);
    }
    (w, b, trace)
}

/// Trains one binary classifier per class (class frames positive, all other
/// frames negative). Classes absent from the training labels are flagged and
/// given a constant-negative classifier.
pub fn train_ovr(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    options: &TrainOptions,
) -> Result<OvrSvmModel> {
    if features.is_empty() || features.len() < 2 {
        return Err(SvmError::EmptyTrainingSet);
    }
    if features.len() != labels.len() {
        return Err(SvmError::WidthMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    if !(options.c > 0.0 && options.c.is_finite()) {
        return Err(SvmError::InvalidOptions("C must be positive".into()));
    }
    let width = features[0].len();
    for f in features {
        if f.len() != width {
            return Err(SvmError::WidthMismatch {
                expected: width,
                actual: f.len(),
            });
        }
    }
    for &l in labels {
        if l >= n_classes {
            return Err(SvmError::LabelOutOfRange { label: l, n_classes });
        }
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(SvmError::SingleClass);
    }

    let standardizer = options.standardize.then(|| Standardizer::fit(features));
    let prepared: Vec<Vec<f64>> = match &standardizer {
        Some(s) => features.iter().map(|f| s.apply(f)).collect(),
        None => features.to_vec(),
    };

    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    order.shuffle(&mut rng);

    let mut weights = Vec::with_capacity(n_classes);
    let mut biases = Vec::with_capacity(n_classes);
    let mut missing = Vec::new();
    let mut traces = Vec::with_capacity(n_classes);
    for class in 0..n_classes {
        let present = labels.iter().any(|&l| l == class);
        if !present {
            missing.push(class);
            weights.push(vec![0.0; width]);
            biases.push(-1.0);
            traces.push(Vec::new());
            continue;
        }
        let targets: Vec<f64> = labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let (w, b, trace) = train_binary(&prepared, &targets, &order, options.c, options.epochs);
        weights.push(w);
        biases.push(b);
        traces.push(trace);
    }

    Ok(OvrSvmModel {
        n_classes,
        feature_width: width,
        c: options.c,
        weights,
        biases,
        standardizer,
        missing_classes: missing,
        objective_traces: traces,
    })
}

impl OvrSvmModel {
    /// Raw per-class margins `w.x + b` for one feature vector.
    pub fn score(&self, feature: &[f64]) -> Result<PhaseConfidence> {
        if feature.len() != self.feature_width {
            return Err(SvmError::WidthMismatch {
                expected: self.feature_width,
                actual: feature.len(),
            });
        }
        let x = match &self.standardizer {
            Some(s) => s.apply(feature),
            None => feature.to_vec(),
        };
        let values = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| w.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        Ok(PhaseConfidence(values))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        container::save(path, SVM_KIND, SVM_VERSION, self)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(container::load(path, SVM_KIND, SVM_VERSION)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_scores_zero() {
        let model = OvrSvmModel {
            n_classes: 3,
            feature_width: 2,
            c: 1.0,
            weights: vec![vec![0.0; 2]; 3],
            biases: vec![0.0; 3],
            standardizer: None,
            missing_classes: vec![],
            objective_traces: vec![],
        };
        assert_eq!(model.score(&[1.0, -5.0]).unwrap().values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn scores_are_affine_in_the_feature() {
        let model = OvrSvmModel {
            n_classes: 2,
            feature_width: 2,
            c: 1.0,
            weights: vec![vec![1.0, 2.0], vec![-1.0, 0.5]],
            biases: vec![0.0, 0.0],
            standardizer: None,
            missing_classes: vec![],
            objective_traces: vec![],
        };
        let x = [0.3, -0.7];
        let lam = 2.5;
        let scaled: Vec<f64> = x.iter().map(|v| lam * v).collect();
        let base = model.score(&x).unwrap();
        let big = model.score(&scaled).unwrap();
        for (a, b) in base.values().iter().zip(big.values()) {
            assert!((lam * a - b).abs() < 1e-12);
        }
        assert_eq!(base.argmax(), big.argmax());
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let model = OvrSvmModel {
            n_classes: 2,
            feature_width: 3,
            c: 1.0,
            weights: vec![vec![0.0; 3]; 2],
            biases: vec![0.0; 2],
            standardizer: None,
            missing_classes: vec![],
            objective_traces: vec![],
        };
        assert!(matches!(
            model.score(&[0.0, 0.0]),
            Err(SvmError::WidthMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn single_class_training_is_rejected() {
        let feats = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = vec![1, 1, 1];
        assert!(matches!(
            train_ovr(&feats, &labels, 3, &TrainOptions::default()),
            Err(SvmError::SingleClass)
        ));
    }

    #[test]
    fn absent_class_is_flagged_constant_negative() {
        let feats = vec![vec![-1.0], vec![-2.0], vec![1.0], vec![2.0]];
        let labels = vec![0, 0, 1, 1];
        let model = train_ovr(&feats, &labels, 3, &TrainOptions::default()).unwrap();
        assert_eq!(model.missing_classes, vec![2]);
        let conf = model.score(&[0.5]).unwrap();
        assert_eq!(conf.values()[2], -1.0);
    }
}
