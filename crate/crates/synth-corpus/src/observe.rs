//! Frame observation models.
//!
//! Feature mode draws from a per-(phase, tool-set) Gaussian: a phase anchor
//! plus additive per-tool offsets plus isotropic noise, which gives the
//! learner a real shared structure between the tool and phase signals.
//! Image mode renders a small procedurally textured tile instead.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::vocab::N_TOOLS;

/// Seed for the default shared generative parameters (anchors/offsets).
pub const DEFAULT_OBSERVATION_SEED: u64 = 0xE9D0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObservationKind {
    Features { dim: usize },
    Image { channels: usize, height: usize, width: usize },
}

impl ObservationKind {
    pub fn len(&self) -> usize {
        match *self {
            ObservationKind::Features { dim } => dim,
            ObservationKind::Image {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        match *self {
            ObservationKind::Features { dim } => vec![dim],
            ObservationKind::Image {
                channels,
                height,
                width,
            } => vec![channels, height, width],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub kind: ObservationKind,
    pub noise_std: f64,
    /// Feature mode only: phase anchor means, `[phase][dim]`.
    anchors: Vec<Vec<f64>>,
    /// Feature mode only: additive per-tool offsets, `[tool][dim]`.
    tool_offsets: Vec<Vec<f64>>,
}

impl ObservationModel {
    /// Feature-mode model. `separation` scales the phase anchors relative to
    /// unit noise; the defaults keep the phases separable by construction.
    pub fn features(
        n_phases: usize,
        dim: usize,
        separation: f64,
        tool_offset_scale: f64,
        noise_std: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let anchors = (0..n_phases)
            .map(|_| (0..dim).map(|_| separation * normal.sample(&mut rng)).collect())
            .collect();
        let tool_offsets = (0..N_TOOLS)
            .map(|_| {
                (0..dim)
                    .map(|_| tool_offset_scale * normal.sample(&mut rng))
                    .collect()
            })
            .collect();
        ObservationModel {
            kind: ObservationKind::Features { dim },
            noise_std,
            anchors,
            tool_offsets,
        }
    }

    pub fn default_features(n_phases: usize) -> Self {
        Self::features(n_phases, 16, 1.5, 0.5, 1.0, DEFAULT_OBSERVATION_SEED)
    }

    /// Image-mode model rendering `channels x extent x extent` tiles.
    pub fn image(extent: usize, noise_std: f64) -> Self {
        ObservationModel {
            kind: ObservationKind::Image {
                channels: 3,
                height: extent,
                width: extent,
            },
            noise_std,
            anchors: Vec::new(),
            tool_offsets: Vec::new(),
        }
    }

    pub fn default_image() -> Self {
        Self::image(32, 0.05)
    }

    /// Generative parameters, exposed for test oracles built on the true
    /// mixture (e.g. a Bayes-optimal reference classifier).
    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn tool_offsets(&self) -> &[Vec<f64>] {
        &self.tool_offsets
    }

    pub fn sample(&self, phase: usize, tools: &[bool; N_TOOLS], rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self.kind {
            ObservationKind::Features { dim } => {
                let normal = Normal::new(0.0, self.noise_std).unwrap();
                let mut obs = self.anchors[phase].clone();
                for (t, &present) in tools.iter().enumerate() {
                    if present {
                        for (o, &d) in obs.iter_mut().zip(&self.tool_offsets[t]) {
                            *o += d;
                        }
                    }
                }
                for o in obs.iter_mut().take(dim) {
                    *o += normal.sample(rng);
                }
                obs
            }
            ObservationKind::Image {
                channels,
                height,
                width,
            } => self.render_tile(phase, tools, channels, height, width, rng),
        }
    }

    /// Phase-colored striped background with one bright square per present
    /// tool at a fixed location.
    fn render_tile(
        &self,
        phase: usize,
        tools: &[bool; N_TOOLS],
        channels: usize,
        height: usize,
        width: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<f64> {
        const PALETTE: [[f64; 3]; 8] = [
            [0.8, 0.2, 0.2],
            [0.2, 0.8, 0.2],
            [0.2, 0.2, 0.8],
            [0.8, 0.8, 0.2],
            [0.8, 0.2, 0.8],
            [0.2, 0.8, 0.8],
            [0.6, 0.6, 0.6],
            [0.9, 0.5, 0.1],
        ];
        let noise = Normal::new(0.0, self.noise_std).unwrap();
        let base = PALETTE[phase % PALETTE.len()];
        let freq = (phase + 2) as f64;
        let mut img = vec![0.0; channels * height * width];
        for c in 0..channels {
            for y in 0..height {
                let stripe = 0.15 * (freq * y as f64 * std::f64::consts::TAU / height as f64).sin();
                for x in 0..width {
                    img[(c * height + y) * width + x] =
                        base[c % 3] + stripe + noise.sample(rng);
                }
            }
        }
        // Tool markers: 3x3 bright patches spread along a band.
        for (t, &present) in tools.iter().enumerate() {
            if !present {
                continue;
            }
            let cx = 2 + (t * (width - 5)) / N_TOOLS.max(1);
            let cy = height / 2;
            let ch = t % channels;
            for dy in 0..3 {
                for dx in 0..3 {
                    let y = cy + dy;
                    let x = cx + dx;
                    if y < height && x < width {
                        img[(ch * height + y) * width + x] = 1.5;
                    }
                }
            }
        }
        img
    }
}
