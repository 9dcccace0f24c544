//! Per-phase precision/recall and frame accuracy, in percent.

use serde::{Deserialize, Serialize};

use crate::error::{MetricsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetric {
    pub phase: usize,
    pub truth_frames: usize,
    pub predicted_frames: usize,
    pub correct_frames: usize,
    /// Percent; `None` when the phase is never predicted.
    pub precision: Option<f64>,
    /// Percent; `None` when the phase does not occur in the ground truth.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScores {
    pub per_phase: Vec<PhaseMetric>,
    /// Mean over phases present in the ground truth and predicted at least
    /// once; phases excluded for an undefined precision are flagged below.
    pub mean_precision: f64,
    /// Mean over phases present in the ground truth.
    pub mean_recall: f64,
    pub accuracy: f64,
    /// Phases present in truth but never predicted (precision undefined).
    pub undefined_precision_phases: Vec<usize>,
}

/// Frame-level scores: recall_p = correct_p / truth_p, precision_p =
/// correct_p / predicted_p, accuracy = correct / total.
pub fn phase_scores(predicted: &[usize], truth: &[usize], n_phases: usize) -> Result<PhaseScores> {
    if predicted.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty("no frames".into()));
    }
    for &p in predicted.iter().chain(truth) {
        if p >= n_phases {
            return Err(MetricsError::BadInput(format!(
                "phase id {p} out of range (< {n_phases})"
            )));
        }
    }

    let mut truth_frames = vec![0usize; n_phases];
    let mut predicted_frames = vec![0usize; n_phases];
    let mut correct_frames = vec![0usize; n_phases];
    let mut correct_total = 0usize;
    for (&p, &t) in predicted.iter().zip(truth) {
        truth_frames[t] += 1;
        predicted_frames[p] += 1;
        if p == t {
            correct_frames[t] += 1;
            correct_total += 1;
        }
    }

    let mut per_phase = Vec::with_capacity(n_phases);
    let mut precision_sum = 0.0;
    let mut precision_n = 0usize;
    let mut recall_sum = 0.0;
    let mut recall_n = 0usize;
    let mut undefined = Vec::new();
    for phase in 0..n_phases {
        let precision = (predicted_frames[phase] > 0)
            .then(|| 100.0 * correct_frames[phase] as f64 / predicted_frames[phase] as f64);
        let recall = (truth_frames[phase] > 0)
            .then(|| 100.0 * correct_frames[phase] as f64 / truth_frames[phase] as f64);
        if truth_frames[phase] > 0 {
            recall_sum += recall.unwrap();
            recall_n += 1;
            match precision {
                Some(p) => {
                    precision_sum += p;
                    precision_n += 1;
                }
                None => undefined.push(phase),
            }
        }
        per_phase.push(PhaseMetric {
            phase,
            truth_frames: truth_frames[phase],
            predicted_frames: predicted_frames[phase],
            correct_frames: correct_frames[phase],
            precision,
            recall,
        });
    }

    Ok(PhaseScores {
        per_phase,
        mean_precision: if precision_n > 0 {
            precision_sum / precision_n as f64
        } else {
            0.0
        },
        mean_recall: if recall_n > 0 {
            recall_sum / recall_n as f64
        } else {
            0.0
        },
        accuracy: 100.0 * correct_total as f64 / truth.len() as f64,
        undefined_precision_phases: undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_scores_100_everywhere() {
        let truth = vec![0, 0, 1, 1, 2];
        let scores = phase_scores(&truth, &truth, 3).unwrap();
        assert_eq!(scores.accuracy, 100.0);
        assert_eq!(scores.mean_precision, 100.0);
        assert_eq!(scores.mean_recall, 100.0);
        for m in &scores.per_phase {
            assert_eq!(m.precision, Some(100.0));
            assert_eq!(m.recall, Some(100.0));
        }
    }

    #[test]
    fn hand_enumerated_two_phase_example() {
        // truth: 10 frames of P1 then 10 of P2; prediction: 5 of P1 then 15
        // of P2. P1: recall 50, precision 100. P2: recall 100, precision
        // 66.67. Accuracy 75.
        let truth: Vec<usize> = std::iter::repeat(0)
            .take(10)
            .chain(std::iter::repeat(1).take(10))
            .collect();
        let pred: Vec<usize> = std::iter::repeat(0)
            .take(5)
            .chain(std::iter::repeat(1).take(15))
            .collect();
        let scores = phase_scores(&pred, &truth, 2).unwrap();
        assert_eq!(scores.per_phase[0].recall, Some(50.0));
        assert_eq!(scores.per_phase[0].precision, Some(100.0));
        assert_eq!(scores.per_phase[1].recall, Some(100.0));
        let p2_precision = scores.per_phase[1].precision.unwrap();
        assert!((p2_precision - 66.6666666666667).abs() < 1e-10);
        assert_eq!(scores.accuracy, 75.0);
    }

    #[test]
    fn phases_absent_from_truth_are_excluded_from_means() {
        // Phase 2 never occurs in truth: only phases 0 and 1 enter the means.
        let truth = vec![0, 0, 1, 1];
        let pred = vec![0, 0, 1, 1];
        let scores = phase_scores(&pred, &truth, 3).unwrap();
        assert_eq!(scores.per_phase[2].recall, None);
        assert_eq!(scores.mean_recall, 100.0);
    }

    #[test]
    fn never_predicted_phase_has_undefined_precision_and_is_flagged() {
        let truth = vec![0, 1, 1, 1];
        let pred = vec![1, 1, 1, 1];
        let scores = phase_scores(&pred, &truth, 2).unwrap();
        assert_eq!(scores.per_phase[0].precision, None);
        assert_eq!(scores.undefined_precision_phases, vec![0]);
        // Mean precision covers phase 1 only.
        assert_eq!(scores.mean_precision, 75.0);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(phase_scores(&[0, 1], &[0], 2).is_err());
    }
}
