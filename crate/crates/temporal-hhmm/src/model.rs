//! The two-level model: phases on top, data-driven sub-states below, one
//! diagonal GMM per sub-state. Decoding flattens the hierarchy into an
//! equivalent plain HMM over (phase, sub-state) pairs.

use serde::{Deserialize, Serialize};
use std::path::Path;

use tensor_net::container;

use crate::error::{HhmmError, Result};
use crate::flat::{forward, viterbi, FlatHmm, StreamingFilter};
use crate::gmm::{fit_gmm_with, log_sum_exp, Gmm};
use crate::topology::{learn_topology, PhaseTopology};

pub const HHMM_KIND: &str = "hhmm";
pub const HHMM_VERSION: u32 = 1;

/// Per-frame log-density floor; keeps a single collapsed emission from
/// annihilating whole decoding paths.
pub const EMISSION_LOG_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhmmConfig {
    /// Mixture components per sub-state GMM (1 for binary signals).
    pub gmm_components: usize,
    /// Sub-state count rule: ceil(median phase duration / this many seconds),
    /// clamped to [1, max_bottom_states].
    pub seconds_per_bottom_state: f64,
    pub max_bottom_states: usize,
    /// Add-epsilon smoothing for observed transitions and self-loops.
    pub smoothing: f64,
    pub em_iterations: usize,
    pub em_tolerance: f64,
    pub seed: u64,
}

impl Default for HhmmConfig {
    fn default() -> Self {
        HhmmConfig {
            gmm_components: 5,
            seconds_per_bottom_state: 30.0,
            max_bottom_states: 8,
            smoothing: 1e-3,
            em_iterations: 50,
            em_tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl HhmmConfig {
    /// Observation model for binary tool signals: a single Gaussian.
    pub fn for_binary_signals(mut self) -> Self {
        self.gmm_components = 1;
        self
    }
}

/// Trained two-level model. `flat_*` hold the flattened HMM in linear
/// probability space; decoders derive the log-space form on demand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hhmm {
    pub n_phases: usize,
    pub obs_dim: usize,
    pub config: HhmmConfig,
    pub topology: PhaseTopology,
    /// Sub-state count per phase.
    pub sub_counts: Vec<usize>,
    /// One GMM per (phase, sub-state), indexed like `state_phase`.
    pub gmms: Vec<Gmm>,
    /// Flat state -> phase id.
    pub state_phase: Vec<usize>,
    pub flat_initial: Vec<f64>,
    pub flat_transition: Vec<Vec<f64>>,
    /// Non-fatal training conditions (e.g. a phase with no frames).
    pub warnings: Vec<String>,
}

/// Decoded sequence plus the mode-specific evidence.
#[derive(Debug, Clone)]
pub enum DecodeResult {
    /// Viterbi over the whole sequence.
    Offline {
        phases: Vec<usize>,
        joint_log_prob: f64,
    },
    /// Forward filtering; `log_filtering[t]` is the per-phase log posterior
    /// given observations up to and including `t`.
    Online {
        phases: Vec<usize>,
        log_filtering: Vec<Vec<f64>>,
        log_likelihood: f64,
    },
}

impl DecodeResult {
    pub fn phases(&self) -> &[usize] {
        match self {
            DecodeResult::Offline { phases, .. } => phases,
            DecodeResult::Online { phases, .. } => phases,
        }
    }
}

fn median(mut values: Vec<usize>) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}

/// Contiguous runs of equal labels: (label, length).
fn runs(labels: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &l in labels {
        match out.last_mut() {
            Some((prev, len)) if *prev == l => *len += 1,
            _ => out.push((l, 1)),
        }
    }
    out
}

/// Trains the two-level model from confidence sequences aligned with phase
/// annotations (one observation vector per 1-fps frame).
pub fn train_hhmm(
    observations: &[Vec<Vec<f64>>],
    labels: &[Vec<usize>],
    n_phases: usize,
    config: &HhmmConfig,
) -> Result<Hhmm> {
    if observations.is_empty() || observations.len() != labels.len() {
        return Err(HhmmError::EmptyInput(
            "need equally many observation and label sequences".into(),
        ));
    }
    for (obs, lab) in observations.iter().zip(labels) {
        if obs.len() != lab.len() || obs.is_empty() {
            return Err(HhmmError::EmptyInput(
                "every sequence must be non-empty and aligned with its labels".into(),
            ));
        }
    }
    let obs_dim = observations[0][0].len();
    for obs in observations {
        for o in obs {
            if o.len() != obs_dim {
                return Err(HhmmError::DimensionMismatch {
                    expected: obs_dim,
                    actual: o.len(),
                });
            }
        }
    }

    let topology = learn_topology(labels, n_phases, config.smoothing)?;
    let mut warnings = Vec::new();

    // Median run length per phase drives the sub-state count.
    let mut run_lengths: Vec<Vec<usize>> = vec![Vec::new(); n_phases];
    for lab in labels {
        for (phase, len) in runs(lab) {
            run_lengths[phase].push(len);
        }
    }
    let sub_counts: Vec<usize> = (0..n_phases)
        .map(|p| {
            if run_lengths[p].is_empty() {
                1
            } else {
                let m = median(run_lengths[p].clone());
                ((m / config.seconds_per_bottom_state).ceil() as usize)
                    .clamp(1, config.max_bottom_states)
            }
        })
        .collect();

    // Flat state layout: states of phase p occupy a contiguous block.
    let mut offsets = vec![0usize; n_phases];
    let mut total = 0usize;
    for p in 0..n_phases {
        offsets[p] = total;
        total += sub_counts[p];
    }
    let mut state_phase = vec![0usize; total];
    for p in 0..n_phases {
        for s in 0..sub_counts[p] {
            state_phase[offsets[p] + s] = p;
        }
    }

    // Uniform temporal segmentation assigns every frame a sub-state; the last
    // frame of a run always lands in the last sub-state so phase exits are
    // routed from there.
    let flat_label = |phase: usize, j: usize, run_len: usize| -> usize {
        let s = sub_counts[phase];
        let sub = if j + 1 == run_len {
            s - 1
        } else {
            (j * s / run_len).min(s - 1)
        };
        offsets[phase] + sub
    };

    let mut flat_sequences: Vec<Vec<usize>> = Vec::with_capacity(labels.len());
    let mut samples_per_state: Vec<Vec<Vec<f64>>> = vec![Vec::new(); total];
    let mut samples_per_phase: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_phases];
    for (obs, lab) in observations.iter().zip(labels) {
        let mut flat_seq = Vec::with_capacity(lab.len());
        let mut t = 0usize;
        for (phase, len) in runs(lab) {
            for j in 0..len {
                let fl = flat_label(phase, j, len);
                flat_seq.push(fl);
                samples_per_state[fl].push(obs[t].clone());
                samples_per_phase[phase].push(obs[t].clone());
                t += 1;
            }
        }
        flat_sequences.push(flat_seq);
    }

    // Flat transition and initial statistics, smoothed like the topology.
    let flat_topo = learn_topology(&flat_sequences, total, config.smoothing)?;

    // Global moments back a prior-wide emission model for unseen states.
    let all_samples: Vec<Vec<f64>> = observations.iter().flatten().cloned().collect();
    let global = fit_gmm_with(&all_samples, 1, config.seed, 1, 1.0)?.gmm;

    let mut gmms: Vec<Gmm> = Vec::with_capacity(total);
    for (state, samples) in samples_per_state.iter().enumerate() {
        let phase = state_phase[state];
        let pool: &[Vec<f64>] = if samples.is_empty() {
            // Fall back to all frames of the phase, then to the global pool.
            if samples_per_phase[phase].is_empty() {
                warnings.push(format!(
                    "phase {phase} has no training frames; using a prior-wide emission model"
                ));
                gmms.push(global.clone());
                continue;
            }
            &samples_per_phase[phase]
        } else {
            samples
        };
        let k = config.gmm_components.min(pool.len());
        let seed = config
            .seed
            .wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(state as u64 + 1));
        let fit = fit_gmm_with(pool, k, seed, config.em_iterations, config.em_tolerance)?;
        gmms.push(fit.gmm);
    }

    Ok(Hhmm {
        n_phases,
        obs_dim,
        config: config.clone(),
        topology,
        sub_counts,
        gmms,
        state_phase,
        flat_initial: flat_topo.initial,
        flat_transition: flat_topo.transition,
        warnings,
    })
}

impl Hhmm {
    pub fn n_states(&self) -> usize {
        self.state_phase.len()
    }

    pub fn flat(&self) -> FlatHmm {
        FlatHmm::from_probs(&self.flat_initial, &self.flat_transition)
    }

    fn check_dim(&self, obs: &[Vec<f64>]) -> Result<()> {
        for o in obs {
            if o.len() != self.obs_dim {
                return Err(HhmmError::DimensionMismatch {
                    expected: self.obs_dim,
                    actual: o.len(),
                });
            }
        }
        Ok(())
    }

    fn log_emission_row(&self, o: &[f64]) -> Vec<f64> {
        self.gmms
            .iter()
            .map(|g| g.log_density(o).max(EMISSION_LOG_FLOOR))
            .collect()
    }

    /// Offline decoding: Viterbi over the full observation sequence.
    pub fn decode_offline(&self, obs: &[Vec<f64>]) -> Result<DecodeResult> {
        self.check_dim(obs)?;
        let log_e: Vec<Vec<f64>> = obs.iter().map(|o| self.log_emission_row(o)).collect();
        let path = viterbi(&self.flat(), &log_e)?;
        Ok(DecodeResult::Offline {
            phases: path.states.iter().map(|&s| self.state_phase[s]).collect(),
            joint_log_prob: path.log_prob,
        })
    }

    /// Online decoding: forward filtering over the full sequence. Each
    /// estimate uses only past and current observations; for a strictly
    /// incremental interface see [`OnlineDecoder`].
    pub fn decode_online(&self, obs: &[Vec<f64>]) -> Result<DecodeResult> {
        self.check_dim(obs)?;
        let flat = self.flat();
        let log_e: Vec<Vec<f64>> = obs.iter().map(|o| self.log_emission_row(o)).collect();
        let pass = forward(&flat, &log_e)?;
        let mut phases = Vec::with_capacity(obs.len());
        let mut log_filtering = Vec::with_capacity(obs.len());
        for alpha in &pass.log_filtering {
            let dist = self.phase_marginal(alpha);
            phases.push(argmax(&dist));
            log_filtering.push(dist);
        }
        Ok(DecodeResult::Online {
            phases,
            log_filtering,
            log_likelihood: pass.log_likelihood,
        })
    }

    /// Marginalizes a log distribution over flat states onto phases.
    fn phase_marginal(&self, log_alpha: &[f64]) -> Vec<f64> {
        (0..self.n_phases)
            .map(|p| {
                let terms: Vec<f64> = log_alpha
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| self.state_phase[*s] == p)
                    .map(|(_, &v)| v)
                    .collect();
                log_sum_exp(&terms)
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        container::save(path, HHMM_KIND, HHMM_VERSION, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(container::load(path, HHMM_KIND, HHMM_VERSION)?)
    }
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Strictly causal phase decoder: observations are pushed one frame at a
/// time and each estimate is returned before the next frame is seen.
pub struct OnlineDecoder<'a> {
    model: &'a Hhmm,
    flat: FlatHmm,
    filter: StreamingFilter,
}

impl<'a> OnlineDecoder<'a> {
    pub fn new(model: &'a Hhmm) -> Self {
        OnlineDecoder {
            flat: model.flat(),
            model,
            filter: StreamingFilter::new(),
        }
    }

    /// Consumes one observation; returns the phase estimate and the log
    /// filtering distribution over phases given everything seen so far.
    pub fn step(&mut self, obs: &[f64]) -> Result<(usize, Vec<f64>)> {
        if obs.len() != self.model.obs_dim {
            return Err(HhmmError::DimensionMismatch {
                expected: self.model.obs_dim,
                actual: obs.len(),
            });
        }
        let row = self.model.log_emission_row(obs);
        let alpha = self.filter.step(&self.flat, &row)?;
        let dist = self.model.phase_marginal(alpha);
        Ok((argmax(&dist), dist))
    }

    pub fn log_likelihood(&self) -> f64 {
        self.filter.log_likelihood()
    }

    pub fn steps_taken(&self) -> usize {
        self.filter.steps_taken()
    }
}
