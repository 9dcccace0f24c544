//! Phase-order grammar: which phase follows which, with optional and
//! alternating segments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};

/// A first-order grammar over phase indices. Rows of `next` are the
/// successor distributions (empty row = terminal phase). Dwell within a
/// phase is governed by durations, not by the grammar, so self-successors
/// are not allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrammar {
    pub start: usize,
    /// `next[phase]` = list of (successor, probability).
    pub next: Vec<Vec<(usize, f64)>>,
}

impl PhaseGrammar {
    pub fn validate(&self, n_phases: usize) -> Result<()> {
        if self.start >= n_phases || self.next.len() != n_phases {
            return Err(CorpusError::Invalid("grammar/vocabulary size mismatch".into()));
        }
        for (p, row) in self.next.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            let sum: f64 = row.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CorpusError::Invalid(format!(
                    "grammar row {p} sums to {sum}, expected 1"
                )));
            }
            for &(q, w) in row {
                if q >= n_phases || q == p || !(w > 0.0) {
                    return Err(CorpusError::Invalid(format!(
                        "bad grammar edge {p} -> {q} ({w})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Linear chain through all phases in order.
    pub fn linear(n_phases: usize) -> Self {
        PhaseGrammar {
            start: 0,
            next: (0..n_phases)
                .map(|p| {
                    if p + 1 < n_phases {
                        vec![(p + 1, 1.0)]
                    } else {
                        vec![]
                    }
                })
                .collect(),
        }
    }

    /// Cholecystectomy-shaped grammar: a fixed prefix through dissection and
    /// clipping, then packaging and cleaning in either order (cleaning is
    /// optional and may alternate with packaging), ending with retraction.
    pub fn cholec80_default() -> Self {
        PhaseGrammar {
            start: 0,
            next: vec![
                vec![(1, 1.0)],             // P1 -> P2
                vec![(2, 1.0)],             // P2 -> P3
                vec![(3, 1.0)],             // P3 -> P4
                vec![(4, 0.75), (5, 0.25)], // P4 -> P5 | P6
                vec![(6, 0.6), (5, 0.4)],   // P5 -> P7 | P6
                vec![(6, 0.7), (4, 0.3)],   // P6 -> P7 | P5
                vec![],                     // P7 terminal
            ],
        }
    }

    /// Samples a phase path (no adjacent repeats), capped at `max_len`
    /// segments as a loop guard.
    pub fn sample_path(&self, rng: &mut ChaCha8Rng, max_len: usize) -> Vec<usize> {
        let mut path = vec![self.start];
        while path.len() < max_len {
            let row = &self.next[*path.last().unwrap()];
            if row.is_empty() {
                break;
            }
            let mut u: f64 = rng.gen_range(0.0..1.0);
            let mut chosen = row.last().unwrap().0;
            for &(q, w) in row {
                if u < w {
                    chosen = q;
                    break;
                }
                u -= w;
            }
            path.push(chosen);
        }
        path
    }

    /// Every (from, to) pair with positive probability.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.next
            .iter()
            .enumerate()
            .flat_map(|(p, row)| row.iter().map(move |&(q, _)| (p, q)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn default_grammar_validates_and_terminates() {
        let g = PhaseGrammar::cholec80_default();
        g.validate(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let path = g.sample_path(&mut rng, 50);
            assert_eq!(*path.first().unwrap(), 0);
            assert_eq!(*path.last().unwrap(), 6, "path did not terminate: {path:?}");
            for w in path.windows(2) {
                assert!(g.next[w[0]].iter().any(|&(q, _)| q == w[1]));
            }
        }
    }

    #[test]
    fn some_paths_skip_the_optional_cleaning_phase() {
        let g = PhaseGrammar::cholec80_default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut with = 0;
        let mut without = 0;
        for _ in 0..300 {
            let path = g.sample_path(&mut rng, 50);
            if path.contains(&5) {
                with += 1;
            } else {
                without += 1;
            }
        }
        assert!(with > 0 && without > 0, "with={with} without={without}");
    }
}
