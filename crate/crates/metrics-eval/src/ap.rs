//! Average precision: step-integrated area under the precision-recall curve,
//! with tied scores grouped into a single PR point.

use serde::{Deserialize, Serialize};

use crate::error::{MetricsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<usize> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(MetricsError::Empty("no scores".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::BadInput("non-finite score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(MetricsError::NoPositiveLabels);
    }
    Ok(positives)
}

/// Precision-recall points, one per distinct threshold in descending order.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<PrPoint>> {
    let positives = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole tie group at this threshold.
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / positives as f64,
        });
    }
    Ok(points)
}

/// AP = sum over PR points of (recall step) * precision, in descending
/// threshold order, without interpolation. Errors when there is no positive
/// label (the value is undefined, not zero).
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let points = pr_curve(scores, labels)?;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for p in &points {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    Ok(ap)
}

/// Smallest threshold whose precision on `(scores, labels)` is at least
/// `target_precision`; `None` if no threshold reaches it.
pub fn select_threshold(scores: &[f64], labels: &[bool], target_precision: f64) -> Option<f64> {
    let points = pr_curve(scores, labels).ok()?;
    points
        .iter()
        .filter(|p| p.precision >= target_precision)
        .map(|p| p.threshold)
        .fold(None, |best: Option<f64>, t| {
            Some(best.map_or(t, |b| b.min(t)))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking_gives_ap_one() {
        let ap = average_precision(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn inverted_pair_gives_half() {
        // Thresholds 0.9 (tp=0, fp=1 -> P=0, R=0) then 0.2 (P=0.5, R=1).
        let ap = average_precision(&[0.9, 0.2], &[false, true]).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn tied_scores_group_into_one_point() {
        // Single PR point at P=0.5, R=1.
        let ap = average_precision(&[0.5, 0.5], &[true, false]).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn zero_positives_is_undefined_not_zero() {
        assert_eq!(
            average_precision(&[0.9, 0.1], &[false, false]).unwrap_err(),
            MetricsError::NoPositiveLabels
        );
    }

    #[test]
    fn threshold_selection_prefers_the_most_permissive_precise_cut() {
        let scores = [0.9, 0.8, 0.7, 0.6, 0.5];
        let labels = [true, true, true, false, true];
        // Precision at 0.7 is 3/3 = 1.0; at 0.5 it is 4/5 = 0.8.
        assert_eq!(select_threshold(&scores, &labels, 0.95), Some(0.7));
        assert_eq!(select_threshold(&scores, &labels, 0.8), Some(0.5));
        assert_eq!(select_threshold(&scores, &labels, 1.01), None);
    }
}
