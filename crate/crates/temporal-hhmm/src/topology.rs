//! Top-level phase transition structure learned from annotated sequences.

use serde::{Deserialize, Serialize};
use std::fmt::Write;

use crate::error::{HhmmError, Result};

/// Default add-epsilon smoothing applied to observed transitions and
/// self-loops before row normalization.
pub const DEFAULT_SMOOTHING: f64 = 1e-3;

/// Bigram-count phase topology. Transitions that never occur in the training
/// sequences have probability exactly zero; observed transitions and
/// self-loops are smoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTopology {
    pub n_phases: usize,
    /// Row-stochastic matrix, `transition[from][to]`.
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl PhaseTopology {
    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.transition[from][to] > 0.0
    }

    /// Plain-text dump, one `from -> to probability` line per allowed
    /// transition, for eyeballing the learned phase graph.
    pub fn dump(&self, names: &[&str]) -> String {
        let mut out = String::new();
        let name = |p: usize| -> String {
            names
                .get(p)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("phase{p}"))
        };
        for from in 0..self.n_phases {
            for to in 0..self.n_phases {
                let p = self.transition[from][to];
                if p > 0.0 {
                    writeln!(out, "{}\t{}\t{:.6}", name(from), name(to), p).unwrap();
                }
            }
        }
        out
    }
}

/// Learns the phase topology from labeled sequences: transition probability
/// is proportional to observed bigram counts, with `epsilon` smoothing on
/// observed transitions and self-loops only.
pub fn learn_topology(
    sequences: &[Vec<usize>],
    n_phases: usize,
    epsilon: f64,
) -> Result<PhaseTopology> {
    if sequences.is_empty() || sequences.iter().any(|s| s.is_empty()) {
        return Err(HhmmError::EmptyInput("topology needs non-empty sequences".into()));
    }
    if n_phases < 1 {
        return Err(HhmmError::InvalidModel("need at least one phase".into()));
    }
    let mut counts = vec![vec![0.0_f64; n_phases]; n_phases];
    let mut initial = vec![0.0_f64; n_phases];
    for seq in sequences {
        for &l in seq {
            if l >= n_phases {
                return Err(HhmmError::LabelOutOfRange { label: l, n_phases });
            }
        }
        initial[seq[0]] += 1.0;
        for pair in seq.windows(2) {
            counts[pair[0]][pair[1]] += 1.0;
        }
    }

    let mut transition = vec![vec![0.0_f64; n_phases]; n_phases];
    for from in 0..n_phases {
        let mut row_sum = 0.0;
        for to in 0..n_phases {
            let observed = counts[from][to] > 0.0 || from == to;
            if observed {
                transition[from][to] = counts[from][to] + epsilon;
                row_sum += transition[from][to];
            }
        }
        if row_sum == 0.0 {
            // Terminal state with zero smoothing: absorb.
            transition[from][from] = 1.0;
        } else {
            for v in &mut transition[from] {
                *v /= row_sum;
            }
        }
    }

    let init_sum: f64 = initial.iter().sum();
    for v in &mut initial {
        *v /= init_sum;
    }

    Ok(PhaseTopology {
        n_phases,
        transition,
        initial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sequence_counts_only_observed_transitions() {
        // P1,P1,P2 -> self-loop on P1 and P1->P2; nothing else from P1.
        let topo = learn_topology(&[vec![0, 0, 1]], 3, 1e-3).unwrap();
        assert!(topo.allows(0, 0));
        assert!(topo.allows(0, 1));
        assert_eq!(topo.transition[0][2], 0.0);
        assert_eq!(topo.transition[1][0], 0.0);
        // Unvisited rows keep only the self-loop.
        assert_eq!(topo.transition[2][2], 1.0);
        let row0: f64 = topo.transition[0].iter().sum();
        assert!((row0 - 1.0).abs() < 1e-9);
        assert_eq!(topo.initial, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn optional_phase_yields_both_bypass_and_through_paths() {
        // Some sequences skip phase index 5 (P6): both P5->P7 and P5->P6
        // must appear in the topology.
        let seqs = vec![
            vec![0, 1, 2, 3, 4, 6],    // skips P6
            vec![0, 1, 2, 3, 4, 5, 6], // goes through P6
        ];
        let topo = learn_topology(&seqs, 7, 1e-3).unwrap();
        assert!(topo.allows(4, 6), "P5->P7 bypass missing");
        assert!(topo.allows(4, 5), "P5->P6 missing");
    }

    #[test]
    fn alternating_phases_produce_both_directions() {
        let seqs = vec![vec![4, 5, 4, 5, 6]];
        let topo = learn_topology(&seqs, 7, 1e-3).unwrap();
        assert!(topo.allows(4, 5));
        assert!(topo.allows(5, 4));
        assert!(topo.allows(5, 6));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(learn_topology(&[], 7, 1e-3).is_err());
        assert!(learn_topology(&[vec![]], 7, 1e-3).is_err());
    }

    #[test]
    fn dump_lists_allowed_transitions_with_probabilities() {
        let topo = learn_topology(&[vec![0, 1]], 2, 0.0).unwrap();
        let dump = topo.dump(&["P1", "P2"]);
        assert!(dump.contains("P1\tP2\t1.000000"));
        assert!(!dump.contains("P2\tP1"));
    }
}
