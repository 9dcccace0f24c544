//! Pre-training on a proxy classification task and multi-task fine-tuning.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tensor_net::{sgd_step, LayerKind, LayerSpec, NetworkState, SgdSchedule, Tensor};

use crate::error::{EndoNetError, Result};
use crate::loss::{phase_loss_with_grads, softmax_ce, tool_loss_with_grads, total_loss};
use crate::model::{EndoNetConfig, EndoNetModel, Standardization, FC_PHASE, FC_TOOL};
use crate::types::{LossWeights, PhaseLogits, PhaseTarget, ToolConfidence, ToolTarget};

/// One annotated training frame with both label kinds.
#[derive(Debug, Clone)]
pub struct TrainFrame {
    pub observation: Vec<f64>,
    pub tools: ToolTarget,
    pub phase: PhaseTarget,
}

/// One loss-log row: iteration, L_T, L_P, L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub tool_loss: f64,
    pub phase_loss: f64,
    pub total: f64,
}

/// Plain-text loss log, one `iteration<TAB>L_T<TAB>L_P<TAB>L` row per line.
pub fn loss_log_text(records: &[LossRecord]) -> String {
    let mut out = String::from("iteration\ttool_loss\tphase_loss\ttotal\n");
    for r in records {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\n",
            r.iteration, r.tool_loss, r.phase_loss, r.total
        ));
    }
    out
}

/// Labeled corpus for the proxy pre-training task.
#[derive(Debug, Clone)]
pub struct ProxyTask {
    pub observations: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

/// Cycles through a seeded shuffle of `0..n`, reshuffling after each pass.
struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        BatchSampler {
            order,
            cursor: 0,
            rng,
        }
    }

    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut batch = Vec::with_capacity(size);
        for _ in 0..size {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }
}

/// Trains a backbone on the proxy task and discards the classification
/// head. Returns the head-less backbone and the loss log.
pub fn pretrain(
    config: &EndoNetConfig,
    task: &ProxyTask,
    schedule: &SgdSchedule,
    seed: u64,
) -> Result<(NetworkState, Vec<LossRecord>)> {
    if task.observations.is_empty() || task.observations.len() != task.labels.len() {
        return Err(EndoNetError::Corpus(
            "proxy task needs aligned, non-empty observations and labels".into(),
        ));
    }
    if task.labels.iter().any(|&l| l >= task.n_classes) {
        return Err(EndoNetError::Corpus("proxy label out of range".into()));
    }

    let mut spec = config.backbone_spec();
    let backbone_layers = spec.layers.len();
    spec.layers.push(LayerSpec::new(
        "proxy_head",
        LayerKind::Dense {
            width: task.n_classes,
        },
    ));
    let mut net = NetworkState::init(spec, seed)?;
    let shape = config.input_shape.clone();
    let standardization =
        Standardization::fit(task.observations.iter().map(|o| o.as_slice()), &shape);

    let inputs: Vec<Tensor> = task
        .observations
        .iter()
        .map(|o| Tensor::from_vec(&shape, standardization.apply(o, &shape)))
        .collect::<tensor_net::Result<_>>()?;

    let mut sampler = BatchSampler::new(inputs.len(), seed ^ 0x5A5A);
    let mut records = Vec::with_capacity(schedule.total_iterations);
    let head_index = net.n_layers() - 1;
    for iteration in 0..schedule.total_iterations {
        let batch = sampler.next_batch(schedule.batch_size);
        let mut batch_loss = 0.0;
        for &i in &batch {
            let acts = net.forward(&inputs[i])?;
            let (loss, grad) = softmax_ce(acts.outputs[head_index].data(), task.labels[i]);
            batch_loss += loss;
            let scale = 1.0 / batch.len() as f64;
            let seed_grad = Tensor::from_vec(
                &[task.n_classes],
                grad.into_iter().map(|g| g * scale).collect(),
            )?;
            net.backward(&acts, &seed_grad)?;
        }
        batch_loss /= batch.len() as f64;
        if !batch_loss.is_finite() {
            return Err(EndoNetError::Diverged { iteration });
        }
        records.push(LossRecord {
            iteration,
            tool_loss: 0.0,
            phase_loss: batch_loss,
            total: batch_loss,
        });
        sgd_step(&mut net, schedule, iteration)?;
    }

    // Strip the head: rebuild the bare backbone and copy the trained
    // parameters across.
    let mut backbone = NetworkState::init(config.backbone_spec(), seed)?;
    for i in 0..backbone_layers {
        *backbone.params_mut(i) = net.params(i).clone();
    }
    Ok((backbone, records))
}

/// Attaches fresh randomly initialized heads to a (typically pre-trained)
/// backbone and trains both tasks jointly with the combined loss
/// `a * L_T + b * L_P`. Backbone layers train at the base rate, heads at
/// their configured multiple.
pub fn finetune(
    config: &EndoNetConfig,
    init: Option<&NetworkState>,
    frames: &[TrainFrame],
    weights: LossWeights,
    schedule: &SgdSchedule,
    seed: u64,
) -> Result<(EndoNetModel, Vec<LossRecord>)> {
    if frames.is_empty() {
        return Err(EndoNetError::Corpus("fine-tuning corpus is empty".into()));
    }
    let shape = config.input_shape.clone();
    let expected: usize = shape.iter().product();
    for (i, f) in frames.iter().enumerate() {
        if f.observation.len() != expected {
            return Err(EndoNetError::Corpus(format!(
                "frame {i}: observation length {} does not match input shape {:?}",
                f.observation.len(),
                shape
            )));
        }
    }

    let mut net = NetworkState::init(config.full_spec(), seed)?;
    if let Some(backbone) = init {
        let n = backbone.n_layers();
        if backbone.spec().layers[..] != net.spec().layers[..n] {
            return Err(EndoNetError::Corpus(
                "backbone does not match the configured architecture".into(),
            ));
        }
        for i in 0..n {
            *net.params_mut(i) = backbone.params(i).clone();
        }
    }
    let fc_tool = net.spec().layer_index(FC_TOOL).expect("tool head");
    let fc_phase = net.spec().layer_index(FC_PHASE).expect("phase head");

    let standardization =
        Standardization::fit(frames.iter().map(|f| f.observation.as_slice()), &shape);
    let inputs: Vec<Tensor> = frames
        .iter()
        .map(|f| Tensor::from_vec(&shape, standardization.apply(&f.observation, &shape)))
        .collect::<tensor_net::Result<_>>()?;

    let mut sampler = BatchSampler::new(frames.len(), seed ^ 0xF17E);
    let mut records = Vec::with_capacity(schedule.total_iterations);
    for iteration in 0..schedule.total_iterations {
        let batch = sampler.next_batch(schedule.batch_size);
        // Forward the whole batch first so the losses match their batch
        // definition, then seed both heads per sample.
        let mut acts_batch = Vec::with_capacity(batch.len());
        let mut tool_logits = Vec::with_capacity(batch.len());
        let mut phase_logits = Vec::with_capacity(batch.len());
        let mut tool_targets = Vec::with_capacity(batch.len());
        let mut phase_targets = Vec::with_capacity(batch.len());
        for &i in &batch {
            let acts = net.forward(&inputs[i])?;
            let mut vt = [0.0; 7];
            vt.copy_from_slice(acts.outputs[fc_tool].data());
            let mut wp = [0.0; 7];
            wp.copy_from_slice(acts.outputs[fc_phase].data());
            tool_logits.push(ToolConfidence(vt));
            phase_logits.push(PhaseLogits(wp));
            tool_targets.push(frames[i].tools);
            phase_targets.push(frames[i].phase);
            acts_batch.push(acts);
        }
        let (lt, tool_grads) = tool_loss_with_grads(&tool_logits, &tool_targets)?;
        let (lp, phase_grads) = phase_loss_with_grads(&phase_logits, &phase_targets)?;
        let total = total_loss(lt, lp, &weights)?;
        if !total.is_finite() {
            return Err(EndoNetError::Diverged { iteration });
        }

        for ((acts, tg), pg) in acts_batch.iter().zip(&tool_grads).zip(&phase_grads) {
            let mut seeds = Vec::with_capacity(2);
            if weights.a > 0.0 {
                let g: Vec<f64> = tg.iter().map(|v| v * weights.a).collect();
                seeds.push((fc_tool, Tensor::from_vec(&[7], g)?));
            }
            if weights.b > 0.0 {
                let g: Vec<f64> = pg.iter().map(|v| v * weights.b).collect();
                seeds.push((fc_phase, Tensor::from_vec(&[7], g)?));
            }
            net.backward_seeded(acts, &seeds)?;
        }
        records.push(LossRecord {
            iteration,
            tool_loss: lt,
            phase_loss: lp,
            total,
        });
        sgd_step(&mut net, schedule, iteration)?;
    }

    Ok((
        EndoNetModel {
            net,
            feature_width: config.feature_width,
            loss_weights: weights,
            standardization,
        },
        records,
    ))
}

/// Desk-scale default schedule: base rate 1e-3 decayed by 10x every 2,000
/// iterations, 5,000 iterations total, batches of 50.
pub fn default_schedule() -> SgdSchedule {
    SgdSchedule::new(1e-3, 0.1, 2000, 5000, 50).expect("valid default schedule")
}

/// Windowed means of the total loss, for convergence checks and plots.
pub fn windowed_means(records: &[LossRecord], window: usize) -> Vec<f64> {
    records
        .chunks(window)
        .map(|chunk| chunk.iter().map(|r| r.total).sum::<f64>() / chunk.len() as f64)
        .collect()
}
