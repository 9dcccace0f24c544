//! Fine-tuning/evaluation splits and cross-validation folds.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub finetune: Vec<String>,
    pub evaluation: Vec<String>,
    /// Partition of `evaluation`, balanced to within one video.
    pub folds: Vec<Vec<String>>,
}

/// Deterministic split: shuffles the ids with the seed, takes
/// `round(n * finetune_fraction)` for fine-tuning, and deals the rest into
/// `folds` round-robin.
pub fn make_split(
    video_ids: &[String],
    finetune_fraction: f64,
    folds: usize,
    seed: u64,
) -> Result<CorpusSplit> {
    if folds == 0 {
        return Err(CorpusError::Invalid("need at least one fold".into()));
    }
    if video_ids.len() < folds * 2 {
        return Err(CorpusError::Invalid(format!(
            "need at least {} videos for {folds} folds, got {}",
            folds * 2,
            video_ids.len()
        )));
    }
    if !(0.0..1.0).contains(&finetune_fraction) {
        return Err(CorpusError::Invalid(
            "finetune fraction must be in [0, 1)".into(),
        ));
    }

    let mut ids = video_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let n_finetune = (video_ids.len() as f64 * finetune_fraction).round() as usize;
    let finetune = ids[..n_finetune].to_vec();
    let evaluation = ids[n_finetune..].to_vec();
    if evaluation.len() < folds {
        return Err(CorpusError::Invalid(format!(
            "evaluation subset ({}) smaller than fold count ({folds})",
            evaluation.len()
        )));
    }

    let mut fold_sets: Vec<Vec<String>> = vec![Vec::new(); folds];
    for (i, id) in evaluation.iter().enumerate() {
        fold_sets[i % folds].push(id.clone());
    }

    Ok(CorpusSplit {
        finetune,
        evaluation,
        folds: fold_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i:03}")).collect()
    }

    #[test]
    fn eighty_videos_split_into_equal_halves_and_folds_of_ten() {
        let split = make_split(&ids(80), 0.5, 4, 1).unwrap();
        assert_eq!(split.finetune.len(), 40);
        assert_eq!(split.evaluation.len(), 40);
        for fold in &split.folds {
            assert_eq!(fold.len(), 10);
        }
        // Disjointness.
        for id in &split.finetune {
            assert!(!split.evaluation.contains(id));
        }
    }

    #[test]
    fn eight_videos_across_four_folds_give_folds_of_two() {
        let split = make_split(&ids(8), 0.0, 4, 1).unwrap();
        assert!(split.finetune.is_empty());
        for fold in &split.folds {
            assert_eq!(fold.len(), 2);
        }
    }

    #[test]
    fn folds_partition_the_evaluation_set() {
        let split = make_split(&ids(17), 0.4, 3, 9).unwrap();
        let mut all: Vec<String> = split.folds.iter().flatten().cloned().collect();
        all.sort();
        let mut eval = split.evaluation.clone();
        eval.sort();
        assert_eq!(all, eval);
        // Balanced to within one.
        let sizes: Vec<usize> = split.folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn same_seed_gives_the_same_split() {
        assert_eq!(
            make_split(&ids(20), 0.5, 4, 7).unwrap(),
            make_split(&ids(20), 0.5, 4, 7).unwrap()
        );
        assert_ne!(
            make_split(&ids(20), 0.5, 4, 7).unwrap(),
            make_split(&ids(20), 0.5, 4, 8).unwrap()
        );
    }

    #[test]
    fn too_few_videos_are_rejected() {
        assert!(make_split(&ids(7), 0.5, 4, 0).is_err());
    }
}
