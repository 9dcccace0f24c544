//! Target and output types shared by the two task heads.

use serde::{Deserialize, Serialize};

use crate::error::{EndoNetError, Result};

/// Number of annotated tools.
pub const N_TOOLS: usize = 7;
/// Number of workflow phases.
pub const N_PHASES: usize = 7;

/// Binary presence indicator per tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolTarget(pub [bool; N_TOOLS]);

impl ToolTarget {
    pub fn indicator(&self) -> [f64; N_TOOLS] {
        let mut out = [0.0; N_TOOLS];
        for (o, &b) in out.iter_mut().zip(&self.0) {
            *o = if b { 1.0 } else { 0.0 };
        }
        out
    }
}

/// One-hot phase indicator, stored as the phase index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTarget(usize);

impl PhaseTarget {
    pub fn new(index: usize) -> Result<Self> {
        if index >= N_PHASES {
            return Err(EndoNetError::NotOneHot(format!(
                "phase index {index} out of range"
            )));
        }
        Ok(PhaseTarget(index))
    }

    pub fn from_one_hot(values: &[f64]) -> Result<Self> {
        if values.len() != N_PHASES {
            return Err(EndoNetError::NotOneHot(format!(
                "expected {N_PHASES} entries, got {}",
                values.len()
            )));
        }
        let mut hot = None;
        for (i, &v) in values.iter().enumerate() {
            if v == 1.0 {
                if hot.is_some() {
                    return Err(EndoNetError::NotOneHot("multiple entries set".into()));
                }
                hot = Some(i);
            } else if v != 0.0 {
                return Err(EndoNetError::NotOneHot(format!("entry {i} is {v}")));
            }
        }
        hot.map(PhaseTarget)
            .ok_or_else(|| EndoNetError::NotOneHot("no entry set".into()))
    }

    pub fn index(&self) -> usize {
        self.0
    }
}

/// Raw per-tool logits from the tool head; presence probability is the
/// sigmoid of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolConfidence(pub [f64; N_TOOLS]);

impl ToolConfidence {
    pub fn probabilities(&self) -> [f64; N_TOOLS] {
        let mut out = [0.0; N_TOOLS];
        for (o, &v) in out.iter_mut().zip(&self.0) {
            *o = sigmoid(v);
        }
        out
    }
}

/// Raw per-phase scores from the phase head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLogits(pub [f64; N_PHASES]);

/// The concatenated feature: the fc7-analog activation (width F) followed by
/// the tool logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fc8Feature {
    feature_width: usize,
    values: Vec<f64>,
}

impl Fc8Feature {
    pub fn new(feature_width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != feature_width + N_TOOLS {
            return Err(EndoNetError::ObservationShape {
                expected: feature_width + N_TOOLS,
                actual: values.len(),
            });
        }
        Ok(Fc8Feature {
            feature_width,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// The fc7-analog slice.
    pub fn backbone_slice(&self) -> &[f64] {
        &self.values[..self.feature_width]
    }

    /// The tool-logit slice (identical to the returned [`ToolConfidence`]).
    pub fn tool_slice(&self) -> &[f64] {
        &self.values[self.feature_width..]
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }
}

/// Weighting coefficients of the combined loss `a * L_T + b * L_P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub a: f64,
    pub b: f64,
}

impl LossWeights {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a + b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(EndoNetError::BadWeights(format!(
                "need a, b >= 0 with a + b > 0, got ({a}, {b})"
            )));
        }
        Ok(LossWeights { a, b })
    }

    /// The multi-task default used throughout: a = b = 1.
    pub fn multi_task() -> Self {
        LossWeights { a: 1.0, b: 1.0 }
    }

    /// Tool-only training (a=1, b=0).
    pub fn tool_only() -> Self {
        LossWeights { a: 1.0, b: 0.0 }
    }

    /// Phase-only training (a=0, b=1).
    pub fn phase_only() -> Self {
        LossWeights { a: 0.0, b: 1.0 }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_target_parses_one_hot() {
        let t = PhaseTarget::from_one_hot(&[0., 0., 1., 0., 0., 0., 0.]).unwrap();
        assert_eq!(t.index(), 2);
        assert!(PhaseTarget::from_one_hot(&[0.; 7]).is_err());
        assert!(PhaseTarget::from_one_hot(&[1., 1., 0., 0., 0., 0., 0.]).is_err());
        assert!(PhaseTarget::from_one_hot(&[0.5, 0.5, 0., 0., 0., 0., 0.]).is_err());
    }

    #[test]
    fn fc8_feature_checks_its_width() {
        assert!(Fc8Feature::new(4, vec![0.0; 11]).is_ok());
        assert!(Fc8Feature::new(4, vec![0.0; 10]).is_err());
    }

    #[test]
    fn loss_weights_reject_degenerate_pairs() {
        assert!(LossWeights::new(0.0, 0.0).is_err());
        assert!(LossWeights::new(-1.0, 2.0).is_err());
        assert!(LossWeights::new(1.0, 0.0).is_ok());
    }
}
