//! Report assembly and rendering: aligned plain-text tables plus delimited
//! machine-readable output.

use serde::{Deserialize, Serialize};
use std::fmt::Write;

use crate::blocks::BlockDetectionReport;
use crate::boundary::BoundaryTable;
use crate::phase::PhaseScores;

/// Full evaluation report for one run: tool presence AP, phase recognition
/// scores, boundary tolerances, and tool-block detection statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// "offline" or "online".
    pub mode: String,
    pub tool_names: Vec<String>,
    pub phase_names: Vec<String>,
    /// AP per tool; `None` when undefined (no positive frames).
    pub tool_ap: Vec<Option<f64>>,
    /// Pooled over all evaluation videos.
    pub phases: PhaseScores,
    pub per_video_accuracy: Vec<(String, f64)>,
    /// Mean of the per-video accuracies.
    pub mean_video_accuracy: f64,
    /// Offline mode only.
    pub boundary: Option<BoundaryTable>,
    /// Per-tool block detection (aligned with `tool_names`); empty when not
    /// evaluated.
    pub blocks: Vec<BlockDetectionReport>,
    /// Thresholds used for block detection, per tool.
    pub block_thresholds: Vec<Option<f64>>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn fmt_pct(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.1}"),
        None => "-".into(),
    }
}

impl EvalReport {
    /// Aligned plain-text tables.
    pub fn text(&self) -> String {
        let mut out = String::new();
        let name_w = self
            .tool_names
            .iter()
            .chain(self.phase_names.iter())
            .map(|s| s.len())
            .max()
            .unwrap_or(8)
            .max(8);

        if self.tool_ap.iter().any(|a| a.is_some()) {
            writeln!(out, "Tool presence detection (average precision, %)").unwrap();
            writeln!(out, "{:<name_w$}  {:>6}", "Tool", "AP").unwrap();
            let mut aps = Vec::new();
            for (name, ap) in self.tool_names.iter().zip(&self.tool_ap) {
                writeln!(
                    out,
                    "{name:<name_w$}  {:>6}",
                    fmt_pct(ap.map(|a| 100.0 * a))
                )
                .unwrap();
                if let Some(a) = ap {
                    aps.push(100.0 * a);
                }
            }
            let (mean, _) = mean_std(&aps);
            writeln!(out, "{:<name_w$}  {mean:>6.1}", "MEAN").unwrap();
            writeln!(out).unwrap();
        }

        writeln!(out, "Phase recognition ({})", self.mode).unwrap();
        writeln!(
            out,
            "{:<name_w$}  {:>9}  {:>9}",
            "Phase", "Prec.", "Rec."
        )
        .unwrap();
        for (name, m) in self.phase_names.iter().zip(&self.phases.per_phase) {
            writeln!(
                out,
                "{name:<name_w$}  {:>9}  {:>9}",
                fmt_pct(m.precision),
                fmt_pct(m.recall)
            )
            .unwrap();
        }
        writeln!(
            out,
            "Avg. precision {:.1}  Avg. recall {:.1}  Accuracy {:.1}",
            self.phases.mean_precision, self.phases.mean_recall, self.mean_video_accuracy
        )
        .unwrap();
        if !self.phases.undefined_precision_phases.is_empty() {
            let names: Vec<&str> = self
                .phases
                .undefined_precision_phases
                .iter()
                .map(|&p| self.phase_names[p].as_str())
                .collect();
            writeln!(out, "(precision undefined, excluded from mean: {})", names.join(", "))
                .unwrap();
        }
        writeln!(out).unwrap();

        if let Some(boundary) = &self.boundary {
            writeln!(out, "Phase boundary tolerance (s)").unwrap();
            write!(out, "{:<12}", "Tolerance").unwrap();
            for name in &self.phase_names {
                write!(out, "  {name:>name_w$}").unwrap();
            }
            writeln!(out).unwrap();
            for bucket in 0..boundary.n_buckets() {
                write!(out, "{:<12}", boundary.bucket_label(bucket)).unwrap();
                for phase in 0..self.phase_names.len() {
                    write!(out, "  {:>name_w$}", boundary.counts[phase][bucket]).unwrap();
                }
                writeln!(out).unwrap();
            }
            write!(out, "{:<12}", "TOTAL").unwrap();
            for phase in 0..self.phase_names.len() {
                write!(out, "  {:>name_w$}", boundary.totals[phase]).unwrap();
            }
            writeln!(out).unwrap();
            writeln!(out).unwrap();
        }

        if !self.blocks.is_empty() {
            writeln!(out, "Tool block detection (gap-merged)").unwrap();
            write!(out, "{:<16}", "Tolerance (s)").unwrap();
            for name in &self.tool_names {
                write!(out, "  {name:>name_w$}").unwrap();
            }
            writeln!(out).unwrap();
            for bucket in 0..4 {
                write!(out, "{:<16}", BlockDetectionReport::latency_label(bucket)).unwrap();
                for b in &self.blocks {
                    write!(out, "  {:>name_w$}", b.latency_counts[bucket]).unwrap();
                }
                writeln!(out).unwrap();
            }
            write!(out, "{:<16}", "Missed").unwrap();
            for b in &self.blocks {
                write!(out, "  {:>name_w$}", b.missed).unwrap();
            }
            writeln!(out).unwrap();
            write!(out, "{:<16}", "False positives").unwrap();
            for b in &self.blocks {
                let cell = format!("{:.1}%", 100.0 * b.false_positive_rate);
                write!(out, "  {cell:>name_w$}").unwrap();
            }
            writeln!(out).unwrap();
        }
        out
    }

    /// Machine-readable tab-separated dump: `section<TAB>key...<TAB>value`.
    pub fn tsv(&self) -> String {
        let mut out = String::new();
        for (name, ap) in self.tool_names.iter().zip(&self.tool_ap) {
            let v = ap.map_or("-".to_string(), |a| format!("{a:.12}"));
            writeln!(out, "tool_ap\t{name}\t{v}").unwrap();
        }
        for (name, m) in self.phase_names.iter().zip(&self.phases.per_phase) {
            let p = m.precision.map_or("-".to_string(), |v| format!("{v:.12}"));
            let r = m.recall.map_or("-".to_string(), |v| format!("{v:.12}"));
            writeln!(out, "phase\t{name}\t{p}\t{r}").unwrap();
        }
        writeln!(
            out,
            "summary\t{}\t{:.12}\t{:.12}\t{:.12}",
            self.mode, self.phases.mean_precision, self.phases.mean_recall, self.mean_video_accuracy
        )
        .unwrap();
        for (video, acc) in &self.per_video_accuracy {
            writeln!(out, "video_accuracy\t{video}\t{acc:.12}").unwrap();
        }
        if let Some(boundary) = &self.boundary {
            for (phase, name) in self.phase_names.iter().enumerate() {
                let row: Vec<String> = boundary.counts[phase]
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                writeln!(
                    out,
                    "boundary\t{name}\t{}\t{}",
                    row.join("\t"),
                    boundary.totals[phase]
                )
                .unwrap();
            }
        }
        for ((name, b), thr) in self
            .tool_names
            .iter()
            .zip(&self.blocks)
            .zip(&self.block_thresholds)
        {
            let t = thr.map_or("-".to_string(), |v| format!("{v:.12}"));
            writeln!(
                out,
                "blocks\t{name}\t{}\t{}\t{}\t{}\t{}\t{:.12}\t{t}",
                b.latency_counts[0],
                b.latency_counts[1],
                b.latency_counts[2],
                b.latency_counts[3],
                b.missed,
                b.false_positive_rate
            )
            .unwrap();
        }
        out
    }
}

/// Color-coded-ribbon style export: one row per frame with the truth and
/// predicted phase ids, suitable for external plotting.
pub fn ribbon_tsv(entries: &[(String, Vec<usize>, Vec<usize>)]) -> String {
    let mut out = String::from("video\tt\ttruth\tpredicted\n");
    for (video, truth, predicted) in entries {
        for (t, (g, p)) in truth.iter().zip(predicted).enumerate() {
            writeln!(out, "{video}\t{t}\t{g}\t{p}").unwrap();
        }
    }
    out
}
