//! Diagonal-covariance Gaussian mixtures fit by expectation-maximization.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HhmmError, Result};

/// Lower bound applied to every variance entry.
pub const VARIANCE_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837877066409345483560659472811;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gmm {
    /// Component weights, summing to 1.
    pub weights: Vec<f64>,
    /// Per-component mean vectors.
    pub means: Vec<Vec<f64>>,
    /// Per-component diagonal variances, floored at [`VARIANCE_FLOOR`].
    pub vars: Vec<Vec<f64>>,
}

impl Gmm {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    fn log_component_density(&self, c: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&xv, &m), &v) in x.iter().zip(&self.means[c]).zip(&self.vars[c]) {
            let d = xv - m;
            acc += -0.5 * (LN_2PI + v.ln()) - d * d / (2.0 * v);
        }
        acc
    }

    /// Log mixture density at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.k())
            .map(|c| {
                let lw = if self.weights[c] > 0.0 {
                    self.weights[c].ln()
                } else {
                    f64::NEG_INFINITY
                };
                lw + self.log_component_density(c, x)
            })
            .collect();
        log_sum_exp(&terms)
    }
}

/// Result of an EM fit, including the per-iteration log-likelihood trace
/// (non-decreasing up to numerical noise).
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub gmm: Gmm,
    pub log_likelihood_trace: Vec<f64>,
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

fn mean_and_variance(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let dim = samples[0].len();
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, &v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for s in samples {
        for ((vv, &v), &m) in var.iter_mut().zip(s).zip(&mean) {
            let d = v - m;
            *vv += d * d;
        }
    }
    for vv in &mut var {
        *vv = (*vv / n).max(VARIANCE_FLOOR);
    }
    (mean, var)
}

/// Fits a `k`-component diagonal GMM. `k = 1` uses the exact closed form;
/// larger `k` runs seeded EM for at most `max_iterations` or until the
/// relative log-likelihood change drops below `tolerance`.
pub fn fit_gmm(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<GmmFit> {
    fit_gmm_with(samples, k, seed, 50, 1e-6)
}

pub fn fit_gmm_with(
    samples: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iterations: usize,
    tolerance: f64,
) -> Result<GmmFit> {
    if k == 0 {
        return Err(HhmmError::InvalidModel("mixture needs k >= 1".into()));
    }
    if samples.len() < k {
        return Err(HhmmError::KTooLarge {
            k,
            n: samples.len(),
        });
    }
    let dim = samples[0].len();
    if dim == 0 || samples.iter().any(|s| s.len() != dim) {
        return Err(HhmmError::InvalidModel(
            "samples must share a positive dimension".into(),
        ));
    }

    if k == 1 {
        let (mean, var) = mean_and_variance(samples);
        let gmm = Gmm {
            weights: vec![1.0],
            means: vec![mean],
            vars: vec![var],
        };
        let ll: f64 = samples.iter().map(|s| gmm.log_density(s)).sum();
        return Ok(GmmFit {
            gmm,
            log_likelihood_trace: vec![ll],
        });
    }

    let n = samples.len();
    let (_, global_var) = mean_and_variance(samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut gmm = Gmm {
        weights: vec![1.0 / k as f64; k],
        means: indices[..k].iter().map(|&i| samples[i].clone()).collect(),
        vars: vec![global_var; k],
    };

    let mut trace = Vec::new();
    let mut resp = vec![vec![0.0_f64; k]; n];
    for _ in 0..max_iterations {
        // E-step.
        let mut ll = 0.0;
        for (i, s) in samples.iter().enumerate() {
            let logs: Vec<f64> = (0..k)
                .map(|c| {
                    let lw = if gmm.weights[c] > 0.0 {
                        gmm.weights[c].ln()
                    } else {
                        f64::NEG_INFINITY
                    };
                    lw + gmm.log_component_density(c, s)
                })
                .collect();
            let norm = log_sum_exp(&logs);
            ll += norm;
            for c in 0..k {
                resp[i][c] = (logs[c] - norm).exp();
            }
        }
        trace.push(ll);

        // M-step.
        for c in 0..k {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            if nk < 1e-10 {
                // Dead component: keep its parameters, zero its weight.
                gmm.weights[c] = 0.0;
                continue;
            }
            gmm.weights[c] = nk / n as f64;
            let mut mean = vec![0.0; dim];
            for (r, s) in resp.iter().zip(samples) {
                for (m, &v) in mean.iter_mut().zip(s) {
                    *m += r[c] * v;
                }
            }
            for m in &mut mean {
                *m /= nk;
            }
            let mut var = vec![0.0; dim];
            for (r, s) in resp.iter().zip(samples) {
                for ((vv, &v), &m) in var.iter_mut().zip(s).zip(&mean) {
                    let d = v - m;
                    *vv += r[c] * d * d;
                }
            }
            for vv in &mut var {
                *vv = (*vv / nk).max(VARIANCE_FLOOR);
            }
            gmm.means[c] = mean;
            gmm.vars[c] = var;
        }
        // Renormalize in case a component died.
        let wsum: f64 = gmm.weights.iter().sum();
        for w in &mut gmm.weights {
            *w /= wsum;
        }

        if trace.len() >= 2 {
            let prev = trace[trace.len() - 2];
            let curr = trace[trace.len() - 1];
            if (curr - prev).abs() <= tolerance * (1.0 + prev.abs()) {
                break;
            }
        }
    }

    Ok(GmmFit {
        gmm,
        log_likelihood_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_is_the_closed_form_mean_and_variance() {
        let samples = vec![vec![1.0, 10.0], vec![3.0, 14.0], vec![5.0, 18.0]];
        let fit = fit_gmm(&samples, 1, 0).unwrap();
        assert_eq!(fit.gmm.means[0], vec![3.0, 14.0]);
        // Population variance: mean of squared deviations.
        let expected_var = vec![(4.0 + 0.0 + 4.0) / 3.0, (16.0 + 0.0 + 16.0) / 3.0];
        assert_eq!(fit.gmm.vars[0], expected_var);
        assert_eq!(fit.gmm.weights, vec![1.0]);
    }

    #[test]
    fn k1_variance_is_floored() {
        let samples = vec![vec![2.0], vec![2.0], vec![2.0]];
        let fit = fit_gmm(&samples, 1, 0).unwrap();
        assert_eq!(fit.gmm.vars[0][0], VARIANCE_FLOOR);
    }

    #[test]
    fn k_larger_than_sample_count_is_rejected() {
        let samples = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            fit_gmm(&samples, 3, 0),
            Err(HhmmError::KTooLarge { k: 3, n: 2 })
        ));
    }

    #[test]
    fn log_density_matches_scalar_gaussian() {
        let gmm = Gmm {
            weights: vec![1.0],
            means: vec![vec![0.0]],
            vars: vec![vec![1.0]],
        };
        // Standard normal at 0: log(1/sqrt(2*pi)).
        let expected = -0.5 * LN_2PI;
        assert!((gmm.log_density(&[0.0]) - expected).abs() < 1e-12);
    }
}
