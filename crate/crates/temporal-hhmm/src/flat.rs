//! Log-space decoding over a flattened HMM.
//!
//! Both decoders are generic over the emission model: they take a
//! per-timestep matrix of log emission densities, so the same code serves
//! GMM observation models and the discrete test fixtures.

use crate::error::{HhmmError, Result};
use crate::gmm::log_sum_exp;

/// A flat HMM in log space. Forbidden transitions are `-inf`.
#[derive(Debug, Clone)]
pub struct FlatHmm {
    pub log_initial: Vec<f64>,
    /// `log_transition[from][to]`.
    pub log_transition: Vec<Vec<f64>>,
}

impl FlatHmm {
    pub fn from_probs(initial: &[f64], transition: &[Vec<f64>]) -> Self {
        let ln = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        FlatHmm {
            log_initial: initial.iter().map(|&p| ln(p)).collect(),
            log_transition: transition
                .iter()
                .map(|row| row.iter().map(|&p| ln(p)).collect())
                .collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.log_initial.len()
    }

    fn check_emissions(&self, log_emissions: &[Vec<f64>]) -> Result<()> {
        if log_emissions.is_empty() {
            return Err(HhmmError::EmptyInput("no observations".into()));
        }
        for row in log_emissions {
            if row.len() != self.n_states() {
                return Err(HhmmError::DimensionMismatch {
                    expected: self.n_states(),
                    actual: row.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub states: Vec<usize>,
    /// Joint log-probability of the best state path and the observations.
    pub log_prob: f64,
}

/// Most likely state path through the flat HMM (log-space dynamic program).
pub fn viterbi(hmm: &FlatHmm, log_emissions: &[Vec<f64>]) -> Result<ViterbiPath> {
    hmm.check_emissions(log_emissions)?;
    let s = hmm.n_states();
    let t_len = log_emissions.len();

    let mut delta: Vec<f64> = (0..s)
        .map(|j| hmm.log_initial[j] + log_emissions[0][j])
        .collect();
    if delta.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(HhmmError::ImpossibleStep { t: 0 });
    }
    let mut backptr = vec![vec![0usize; s]; t_len];

    for t in 1..t_len {
        let mut next = vec![f64::NEG_INFINITY; s];
        for j in 0..s {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for i in 0..s {
                let v = delta[i] + hmm.log_transition[i][j];
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            next[j] = best + log_emissions[t][j];
            backptr[t][j] = arg;
        }
        if next.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(HhmmError::ImpossibleStep { t });
        }
        delta = next;
    }

    let (mut state, &log_prob) = delta
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let mut states = vec![0usize; t_len];
    states[t_len - 1] = state;
    for t in (1..t_len).rev() {
        state = backptr[t][state];
        states[t - 1] = state;
    }
    Ok(ViterbiPath { states, log_prob })
}

/// Result of a full forward pass: per-step normalized log filtering
/// distributions over states and the total sequence log-likelihood.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub log_filtering: Vec<Vec<f64>>,
    pub log_likelihood: f64,
}

/// Forward algorithm over a complete emission matrix.
pub fn forward(hmm: &FlatHmm, log_emissions: &[Vec<f64>]) -> Result<ForwardPass> {
    hmm.check_emissions(log_emissions)?;
    let mut filter = StreamingFilter::new();
    let mut log_filtering = Vec::with_capacity(log_emissions.len());
    for row in log_emissions {
        let alpha = filter.step(hmm, row)?;
        log_filtering.push(alpha.to_vec());
    }
    Ok(ForwardPass {
        log_filtering,
        log_likelihood: filter.log_likelihood(),
    })
}

/// One-observation-at-a-time forward filtering. The filter owns only its
/// running state, so an estimate can never depend on observations that have
/// not been fed to it yet.
#[derive(Debug, Clone, Default)]
pub struct StreamingFilter {
    log_alpha: Option<Vec<f64>>,
    log_likelihood: f64,
    t: usize,
}

impl StreamingFilter {
    pub fn new() -> Self {
        StreamingFilter::default()
    }

    /// Advances the filter by one observation (given as per-state log
    /// emissions) and returns the normalized log filtering distribution.
    pub fn step(&mut self, hmm: &FlatHmm, log_emission_row: &[f64]) -> Result<&[f64]> {
        let s = hmm.n_states();
        if log_emission_row.len() != s {
            return Err(HhmmError::DimensionMismatch {
                expected: s,
                actual: log_emission_row.len(),
            });
        }
        let mut alpha: Vec<f64> = match &self.log_alpha {
            None => (0..s)
                .map(|j| hmm.log_initial[j] + log_emission_row[j])
                .collect(),
            Some(prev) => (0..s)
                .map(|j| {
                    let terms: Vec<f64> = (0..s)
                        .map(|i| prev[i] + hmm.log_transition[i][j])
                        .collect();
                    log_sum_exp(&terms) + log_emission_row[j]
                })
                .collect(),
        };
        let norm = log_sum_exp(&alpha);
        if norm == f64::NEG_INFINITY {
            return Err(HhmmError::ImpossibleStep { t: self.t });
        }
        for a in &mut alpha {
            *a -= norm;
        }
        self.log_likelihood += norm;
        self.log_alpha = Some(alpha);
        self.t += 1;
        Ok(self.log_alpha.as_deref().unwrap())
    }

    /// Log-likelihood of everything seen so far.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two states; state 0 emits symbol `a` with probability 0.9 and `b`
    /// with 0.1, state 1 the reverse. Start in state 0; sticky transitions.
    fn two_state() -> FlatHmm {
        FlatHmm::from_probs(&[1.0, 0.0], &[vec![0.8, 0.2], vec![0.2, 0.8]])
    }

    fn emissions(symbols: &[char]) -> Vec<Vec<f64>> {
        symbols
            .iter()
            .map(|&c| match c {
                'a' => vec![0.9_f64.ln(), 0.1_f64.ln()],
                _ => vec![0.1_f64.ln(), 0.9_f64.ln()],
            })
            .collect()
    }

    #[test]
    fn viterbi_matches_the_hand_worked_example() {
        // Observations a,a,b: the best path is (s0,s0,s1) with joint
        // probability 1*0.9 * 0.8*0.9 * 0.2*0.9 = 0.11664.
        let path = viterbi(&two_state(), &emissions(&['a', 'a', 'b'])).unwrap();
        assert_eq!(path.states, vec![0, 0, 1]);
        assert!((path.log_prob - 0.11664_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn forward_matches_the_hand_worked_example() {
        // Observations a,b: paths (s0,s0) = 0.9*0.8*0.1 = 0.072 and
        // (s0,s1) = 0.9*0.2*0.9 = 0.162; total likelihood 0.234.
        let pass = forward(&two_state(), &emissions(&['a', 'b'])).unwrap();
        assert!((pass.log_likelihood - 0.234_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn single_state_path_is_constant_with_summed_emissions() {
        let hmm = FlatHmm::from_probs(&[1.0], &[vec![1.0]]);
        let log_e = vec![vec![-0.5], vec![-1.5], vec![-2.5]];
        let path = viterbi(&hmm, &log_e).unwrap();
        assert_eq!(path.states, vec![0, 0, 0]);
        assert!((path.log_prob - (-4.5)).abs() < 1e-12);
    }

    #[test]
    fn impossible_step_is_reported_with_its_timestep() {
        let hmm = two_state();
        let mut log_e = emissions(&['a', 'a']);
        log_e[1] = vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
        match viterbi(&hmm, &log_e) {
            Err(HhmmError::ImpossibleStep { t }) => assert_eq!(t, 1),
            other => panic!("expected impossible step, got {other:?}"),
        }
    }

    #[test]
    fn filtering_distributions_are_normalized() {
        let pass = forward(&two_state(), &emissions(&['a', 'b', 'a', 'b'])).unwrap();
        for row in &pass.log_filtering {
            let sum: f64 = row.iter().map(|v| v.exp()).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_emissions_reduce_to_transition_dynamics() {
        let hmm = FlatHmm::from_probs(&[0.5, 0.5], &[vec![0.9, 0.1], vec![0.3, 0.7]]);
        let log_e = vec![vec![0.0, 0.0]; 4];
        let pass = forward(&hmm, &log_e).unwrap();
        // p_t = p_{t-1} * A, starting from the initial distribution.
        let mut p = vec![0.5, 0.5];
        for row in &pass.log_filtering {
            for (l, e) in row.iter().zip(&p) {
                assert!((l.exp() - e).abs() < 1e-12);
            }
            let next0 = p[0] * 0.9 + p[1] * 0.3;
            let next1 = p[0] * 0.1 + p[1] * 0.7;
            p = vec![next0, next1];
        }
    }

    #[test]
    fn long_sequences_stay_finite_in_log_space() {
        let hmm = two_state();
        let symbols: Vec<char> = (0..10_000).map(|i| if i % 3 == 0 { 'b' } else { 'a' }).collect();
        let pass = forward(&hmm, &emissions(&symbols)).unwrap();
        assert!(pass.log_likelihood.is_finite());
        let path = viterbi(&hmm, &emissions(&symbols)).unwrap();
        assert!(path.log_prob.is_finite());
        assert!(pass.log_filtering.iter().flatten().all(|v| !v.is_nan()));
    }
}
