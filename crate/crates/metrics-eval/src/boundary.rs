//! Phase-boundary timing errors bucketed by tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{MetricsError, Result};

/// Default bucket edges in seconds: <30, 30-59, 60-89, 90-119, >=120.
pub const DEFAULT_TOLERANCES: [u32; 4] = [30, 60, 90, 120];

/// Boundary error of each phase occurring in `truth`: the absolute offset
/// (seconds at 1 fps) between the first truth frame and the first predicted
/// frame of that phase. `None` means the phase was never predicted.
pub fn boundary_errors(
    predicted: &[usize],
    truth: &[usize],
    n_phases: usize,
) -> Result<Vec<(usize, Option<u32>)>> {
    if predicted.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty("no frames".into()));
    }
    let mut first_truth = vec![None; n_phases];
    let mut first_pred = vec![None; n_phases];
    for (t, (&p, &g)) in predicted.iter().zip(truth).enumerate() {
        if g >= n_phases || p >= n_phases {
            return Err(MetricsError::BadInput(format!(
                "phase id out of range at frame {t}"
            )));
        }
        if first_truth[g].is_none() {
            first_truth[g] = Some(t);
        }
        if first_pred[p].is_none() {
            first_pred[p] = Some(t);
        }
    }
    let mut out = Vec::new();
    for phase in 0..n_phases {
        if let Some(tt) = first_truth[phase] {
            let err = first_pred[phase].map(|tp| (tp as i64 - tt as i64).unsigned_abs() as u32);
            out.push((phase, err));
        }
    }
    Ok(out)
}

/// Aggregated per-phase boundary counts per tolerance bucket. Buckets are
/// `[0, edge0)`, `[edge0, edge1)`, ..., plus a final `>= last edge` bucket;
/// missed phases (never predicted) land in the final bucket and are also
/// counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTable {
    pub tolerances: Vec<u32>,
    /// `counts[phase][bucket]`.
    pub counts: Vec<Vec<usize>>,
    /// Number of occurrences of each phase across the added sequences.
    pub totals: Vec<usize>,
    /// Phases present in truth but never predicted.
    pub missed: Vec<usize>,
}

impl BoundaryTable {
    pub fn new(n_phases: usize, tolerances: &[u32]) -> Self {
        BoundaryTable {
            tolerances: tolerances.to_vec(),
            counts: vec![vec![0; tolerances.len() + 1]; n_phases],
            totals: vec![0; n_phases],
            missed: vec![0; n_phases],
        }
    }

    pub fn n_buckets(&self) -> usize {
        self.tolerances.len() + 1
    }

    fn bucket(&self, error: u32) -> usize {
        for (i, &edge) in self.tolerances.iter().enumerate() {
            if error < edge {
                return i;
            }
        }
        self.tolerances.len()
    }

    /// Adds one decoded/truth sequence pair.
    pub fn add(&mut self, predicted: &[usize], truth: &[usize]) -> Result<()> {
        let n_phases = self.counts.len();
        let last_bucket = self.n_buckets() - 1;
        for (phase, err) in boundary_errors(predicted, truth, n_phases)? {
            self.totals[phase] += 1;
            match err {
                Some(e) => {
                    let bucket = self.bucket(e);
                    self.counts[phase][bucket] += 1;
                }
                None => {
                    self.counts[phase][last_bucket] += 1;
                    self.missed[phase] += 1;
                }
            }
        }
        Ok(())
    }

    pub fn bucket_label(&self, bucket: usize) -> String {
        if bucket == 0 {
            format!("<{}", self.tolerances[0])
        } else if bucket < self.tolerances.len() {
            format!("{}-{}", self.tolerances[bucket - 1], self.tolerances[bucket] - 1)
        } else {
            format!(">={}", self.tolerances.last().unwrap())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_second_offset_lands_under_thirty() {
        // Truth: phase 1 starts at t=100; prediction first shows it at 115.
        let mut truth = vec![0; 100];
        truth.extend(vec![1; 100]);
        let mut pred = vec![0; 115];
        pred.extend(vec![1; 85]);
        let errors = boundary_errors(&pred, &truth, 2).unwrap();
        assert_eq!(errors, vec![(0, Some(0)), (1, Some(15))]);

        let mut table = BoundaryTable::new(2, &DEFAULT_TOLERANCES);
        table.add(&pred, &truth).unwrap();
        assert_eq!(table.counts[1], vec![1, 0, 0, 0, 0]);
        assert_eq!(table.bucket_label(0), "<30");
        assert_eq!(table.bucket_label(1), "30-59");
        assert_eq!(table.bucket_label(4), ">=120");
    }

    #[test]
    fn perfect_prediction_is_all_zero_error() {
        let truth = vec![0, 0, 1, 1, 2, 2];
        let mut table = BoundaryTable::new(3, &DEFAULT_TOLERANCES);
        table.add(&truth, &truth).unwrap();
        for phase in 0..3 {
            assert_eq!(table.counts[phase][0], 1);
            assert_eq!(table.totals[phase], 1);
        }
        assert_eq!(table.missed, vec![0, 0, 0]);
    }

    #[test]
    fn missing_phase_is_flagged_and_counted_in_the_last_bucket() {
        let truth = vec![0, 0, 1, 1];
        let pred = vec![0, 0, 0, 0];
        let mut table = BoundaryTable::new(2, &DEFAULT_TOLERANCES);
        table.add(&pred, &truth).unwrap();
        assert_eq!(table.counts[1][4], 1);
        assert_eq!(table.missed[1], 1);
    }

    #[test]
    fn phases_absent_from_truth_shrink_the_denominator() {
        // Phase 2 absent: totals stay 0 for it.
        let truth = vec![0, 1];
        let mut table = BoundaryTable::new(3, &DEFAULT_TOLERANCES);
        table.add(&truth, &truth).unwrap();
        assert_eq!(table.totals, vec![1, 1, 0]);
    }
}
