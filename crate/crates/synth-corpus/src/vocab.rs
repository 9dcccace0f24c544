//! Phase vocabularies and the fixed tool list.

use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};

/// Number of annotated tools.
pub const N_TOOLS: usize = 7;

/// Tool display names, in annotation order.
pub const TOOL_NAMES: [&str; N_TOOLS] = [
    "Bipolar",
    "Clipper",
    "Grasper",
    "Hook",
    "Irrigator",
    "Scissors",
    "SpecimenBag",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDef {
    pub id: String,
    pub name: String,
    /// Mean duration in seconds.
    pub mean_s: f64,
    /// Standard deviation of the duration in seconds.
    pub std_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVocabulary {
    pub name: String,
    pub phases: Vec<PhaseDef>,
}

fn phase(id: &str, name: &str, mean_s: f64, std_s: f64) -> PhaseDef {
    PhaseDef {
        id: id.into(),
        name: name.into(),
        mean_s,
        std_s,
    }
}

impl PhaseVocabulary {
    pub fn new(name: &str, phases: Vec<PhaseDef>) -> Result<Self> {
        if phases.len() < 2 {
            return Err(CorpusError::Invalid("vocabulary needs >= 2 phases".into()));
        }
        for p in &phases {
            if !(p.mean_s > 0.0 && p.std_s > 0.0) {
                return Err(CorpusError::Invalid(format!(
                    "phase {} needs positive duration moments",
                    p.id
                )));
            }
        }
        Ok(PhaseVocabulary {
            name: name.into(),
            phases,
        })
    }

    /// The seven-phase cholecystectomy vocabulary with its published
    /// duration statistics.
    pub fn cholec80() -> Self {
        PhaseVocabulary {
            name: "cholec80".into(),
            phases: vec![
                phase("P1", "Preparation", 125.0, 95.0),
                phase("P2", "Calot triangle dissection", 954.0, 538.0),
                phase("P3", "Clipping and cutting", 168.0, 152.0),
                phase("P4", "Gallbladder dissection", 857.0, 551.0),
                phase("P5", "Gallbladder packaging", 98.0, 53.0),
                phase("P6", "Cleaning and coagulation", 178.0, 166.0),
                phase("P7", "Gallbladder retraction", 83.0, 56.0),
            ],
        }
    }

    /// The alternative seven-phase vocabulary (trocar placement, merged
    /// preparation) shipped as data only.
    pub fn endovis() -> Self {
        PhaseVocabulary {
            name: "endovis".into(),
            phases: vec![
                phase("P0", "Placement trocars", 180.0, 118.0),
                phase("P12", "Preparation", 419.0, 215.0),
                phase("P3", "Clipping and cutting", 390.0, 194.0),
                phase("P4", "Gallbladder dissection", 563.0, 436.0),
                phase("P5", "Retrieving gallbladder", 391.0, 246.0),
                phase("P6", "Hemostasis", 336.0, 62.0),
                phase("P7", "Drainage and closing", 171.0, 128.0),
            ],
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "cholec80" => Some(Self::cholec80()),
            "endovis" => Some(Self::endovis()),
            _ => None,
        }
    }

    pub fn n_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.phases.iter().position(|p| p.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.phases.iter().map(|p| p.id.as_str()).collect()
    }
}

/// Per-phase Bernoulli presence probability for each tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolUsageProfile {
    /// `presence[phase][tool]`.
    pub presence: Vec<Vec<f64>>,
}

impl ToolUsageProfile {
    pub fn new(presence: Vec<Vec<f64>>) -> Result<Self> {
        for row in &presence {
            if row.len() != N_TOOLS {
                return Err(CorpusError::Invalid(format!(
                    "usage rows need {N_TOOLS} tools, got {}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(CorpusError::Invalid("usage probabilities must be in [0,1]".into()));
            }
        }
        Ok(ToolUsageProfile { presence })
    }

    /// Default profile shaped like the cholecystectomy annotation
    /// statistics: hook-dominant dissection phases, clipper/scissors around
    /// clipping, irrigator and bipolar in cleaning, specimen bag for
    /// packaging and retraction.
    pub fn cholec80_default() -> Self {
        // Columns: Bipolar, Clipper, Grasper, Hook, Irrigator, Scissors, SpecimenBag.
        ToolUsageProfile {
            presence: vec![
                vec![0.02, 0.01, 0.55, 0.08, 0.02, 0.01, 0.01], // Preparation
                vec![0.03, 0.01, 0.60, 0.82, 0.02, 0.01, 0.01], // Calot dissection
                vec![0.05, 0.55, 0.55, 0.20, 0.05, 0.25, 0.01], // Clipping and cutting
                vec![0.08, 0.02, 0.50, 0.85, 0.05, 0.02, 0.01], // Gallbladder dissection
                vec![0.05, 0.01, 0.60, 0.05, 0.05, 0.01, 0.75], // Packaging
                vec![0.45, 0.01, 0.40, 0.05, 0.60, 0.01, 0.05], // Cleaning and coagulation
                vec![0.05, 0.01, 0.50, 0.02, 0.05, 0.01, 0.45], // Retraction
            ],
        }
    }

    pub fn n_phases(&self) -> usize {
        self.presence.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_vocabularies_have_seven_phases() {
        assert_eq!(PhaseVocabulary::cholec80().n_phases(), 7);
        assert_eq!(PhaseVocabulary::endovis().n_phases(), 7);
        assert_eq!(PhaseVocabulary::cholec80().index_of("P2"), Some(1));
        assert!(PhaseVocabulary::by_name("nope").is_none());
    }

    #[test]
    fn scaled_mean_duration_matches_the_published_moments() {
        // P1 at scale 0.1: 125 * 0.1 = 12.5 seconds.
        let vocab = PhaseVocabulary::cholec80();
        assert_eq!(vocab.phases[0].mean_s * 0.1, 12.5);
        assert_eq!(vocab.phases[1].mean_s, 954.0);
        assert_eq!(vocab.phases[1].std_s, 538.0);
    }

    #[test]
    fn usage_profile_validates_shape_and_range() {
        assert!(ToolUsageProfile::new(vec![vec![0.5; 6]]).is_err());
        assert!(ToolUsageProfile::new(vec![vec![1.5; 7]]).is_err());
        let p = ToolUsageProfile::cholec80_default();
        assert_eq!(p.n_phases(), 7);
        // Hook dominates the dissection phases.
        assert!(p.presence[1][3] > 0.7);
        assert!(p.presence[3][3] > 0.7);
    }
}
