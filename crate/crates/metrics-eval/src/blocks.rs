//! Tool-block extraction (gap merging) and block-level detection statistics.

use serde::{Deserialize, Serialize};

/// A maximal run of frames in which a tool is present, after gap merging.
/// Frame indices are inclusive on both ends, 1-fps indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolBlock {
    pub start: usize,
    pub end: usize,
}

impl ToolBlock {
    pub fn overlaps(&self, other: &ToolBlock) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Maximal runs of presence, with consecutive runs merged when the gap
/// between them is shorter than `gap_seconds`. Idempotent: re-merging the
/// result changes nothing.
pub fn tool_blocks(presence: &[bool], gap_seconds: usize) -> Vec<ToolBlock> {
    let mut blocks: Vec<ToolBlock> = Vec::new();
    let mut run_start: Option<usize> = None;
    for (t, &on) in presence.iter().enumerate() {
        match (on, run_start) {
            (true, None) => run_start = Some(t),
            (false, Some(s)) => {
                push_merged(&mut blocks, ToolBlock { start: s, end: t - 1 }, gap_seconds);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        push_merged(
            &mut blocks,
            ToolBlock {
                start: s,
                end: presence.len() - 1,
            },
            gap_seconds,
        );
    }
    blocks
}

fn push_merged(blocks: &mut Vec<ToolBlock>, block: ToolBlock, gap_seconds: usize) {
    if let Some(last) = blocks.last_mut() {
        // Gap is the number of absent frames between the runs.
        let gap = block.start - last.end - 1;
        if gap < gap_seconds {
            last.end = block.end;
            return;
        }
    }
    blocks.push(block);
}

/// Latency bucket edges in seconds (inclusive upper bounds): <=5, 6-29,
/// 30-59, >=60, plus missed.
pub const LATENCY_EDGES: [usize; 3] = [5, 29, 59];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDetectionReport {
    pub n_truth_blocks: usize,
    /// Identified blocks per latency bucket: <=5, 6-29, 30-59, >=60.
    pub latency_counts: [usize; 4],
    /// Truth blocks with no detected frame inside them.
    pub missed: usize,
    /// Gap-merged detection blocks overlapping no truth block.
    pub n_false_positives: usize,
    /// `n_false_positives / n_detected_blocks` (0 when nothing is detected).
    pub false_positive_rate: f64,
    pub n_detected_blocks: usize,
    /// True when the tool has no truth blocks at all.
    pub empty: bool,
}

impl BlockDetectionReport {
    pub fn latency_label(bucket: usize) -> &'static str {
        match bucket {
            0 => "<=5",
            1 => "6-29",
            2 => "30-59",
            _ => ">=60",
        }
    }

    /// Pools another (per-video) report into this one. Blocks never span
    /// videos, so summing the counts is exact.
    pub fn merge(&mut self, other: &BlockDetectionReport) {
        self.n_truth_blocks += other.n_truth_blocks;
        for (a, b) in self.latency_counts.iter_mut().zip(other.latency_counts) {
            *a += b;
        }
        self.missed += other.missed;
        self.n_false_positives += other.n_false_positives;
        self.n_detected_blocks += other.n_detected_blocks;
        self.false_positive_rate = if self.n_detected_blocks == 0 {
            0.0
        } else {
            self.n_false_positives as f64 / self.n_detected_blocks as f64
        };
        self.empty = self.n_truth_blocks == 0;
    }

    pub fn empty_report() -> Self {
        BlockDetectionReport {
            n_truth_blocks: 0,
            latency_counts: [0; 4],
            missed: 0,
            n_false_positives: 0,
            false_positive_rate: 0.0,
            n_detected_blocks: 0,
            empty: true,
        }
    }
}

/// Block-level detection statistics for one tool. A truth block counts as
/// identified if at least one of its frames clears the confidence threshold;
/// the latency is the offset of the first such frame from the block start.
/// Detections are gap-merged before computing the false-positive rate.
pub fn block_detection_report(
    truth_presence: &[bool],
    confidences: &[f64],
    threshold: f64,
    gap_seconds: usize,
) -> BlockDetectionReport {
    debug_assert_eq!(truth_presence.len(), confidences.len());
    let truth_blocks = tool_blocks(truth_presence, gap_seconds);
    let detected: Vec<bool> = confidences.iter().map(|&c| c >= threshold).collect();
    let detected_blocks = tool_blocks(&detected, gap_seconds);

    let mut latency_counts = [0usize; 4];
    let mut missed = 0usize;
    for block in &truth_blocks {
        let first_hit = (block.start..=block.end).find(|&t| detected[t]);
        match first_hit {
            Some(t) => {
                let latency = t - block.start;
                let bucket = LATENCY_EDGES
                    .iter()
                    .position(|&e| latency <= e)
                    .unwrap_or(3);
                latency_counts[bucket] += 1;
            }
            None => missed += 1,
        }
    }

    let n_false_positives = detected_blocks
        .iter()
        .filter(|d| !truth_blocks.iter().any(|t| t.overlaps(d)))
        .count();
    let false_positive_rate = if detected_blocks.is_empty() {
        0.0
    } else {
        n_false_positives as f64 / detected_blocks.len() as f64
    };

    BlockDetectionReport {
        n_truth_blocks: truth_blocks.len(),
        latency_counts,
        missed,
        n_false_positives,
        false_positive_rate,
        n_detected_blocks: detected_blocks.len(),
        empty: truth_blocks.is_empty(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn presence(ranges: &[(usize, usize)], len: usize) -> Vec<bool> {
        let mut p = vec![false; len];
        for &(a, b) in ranges {
            for t in a..=b {
                p[t] = true;
            }
        }
        p
    }

    #[test]
    fn nine_second_gap_merges_into_one_block() {
        let p = presence(&[(10, 20), (30, 40)], 60);
        assert_eq!(tool_blocks(&p, 15), vec![ToolBlock { start: 10, end: 40 }]);
    }

    #[test]
    fn nineteen_second_gap_stays_split() {
        let p = presence(&[(10, 20), (40, 50)], 60);
        assert_eq!(
            tool_blocks(&p, 15),
            vec![
                ToolBlock { start: 10, end: 20 },
                ToolBlock { start: 40, end: 50 }
            ]
        );
    }

    #[test]
    fn all_zero_stream_has_no_blocks() {
        assert!(tool_blocks(&[false; 30], 15).is_empty());
        assert!(tool_blocks(&[], 15).is_empty());
    }

    #[test]
    fn exact_detection_has_zero_latency_and_no_false_positives() {
        let p = presence(&[(5, 15), (40, 55)], 70);
        let conf: Vec<f64> = p.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let report = block_detection_report(&p, &conf, 0.5, 15);
        assert_eq!(report.n_truth_blocks, 2);
        assert_eq!(report.latency_counts, [2, 0, 0, 0]);
        assert_eq!(report.missed, 0);
        assert_eq!(report.false_positive_rate, 0.0);
    }

    #[test]
    fn disjoint_detection_counts_as_false_positive() {
        let truth = presence(&[(5, 10)], 80);
        // One detection far away from truth.
        let mut conf = vec![0.0; 80];
        for c in conf.iter_mut().take(65).skip(60) {
            *c = 1.0;
        }
        let report = block_detection_report(&truth, &conf, 0.5, 15);
        assert_eq!(report.missed, 1);
        assert_eq!(report.n_detected_blocks, 1);
        assert_eq!(report.false_positive_rate, 1.0);
    }

    #[test]
    fn no_truth_blocks_flags_the_report_empty() {
        let report = block_detection_report(&[false; 10], &[0.0; 10], 0.5, 15);
        assert!(report.empty);
        assert_eq!(report.n_truth_blocks, 0);
    }

    #[test]
    fn detection_latency_is_bucketed() {
        let truth = presence(&[(0, 100)], 120);
        let mut conf = vec![0.0; 120];
        conf[40] = 1.0; // latency 40 -> bucket 30-59
        let report = block_detection_report(&truth, &conf, 0.5, 15);
        assert_eq!(report.latency_counts, [0, 0, 1, 0]);
    }
}
