//! Feature-variant comparison: phase recognition from (i) ground-truth
//! binary tool vectors, (ii) the fc7 feature of a single-task phase network,
//! (iii) the fc8 feature of the multi-task network, and (iv) the multi-task
//! fc7 feature concatenated with ground-truth tools.

use std::fs;

use classifier_svm::{train_ovr, TrainOptions};
use endonet::{finetune, EndoNetModel, LossWeights, PhaseTarget, TrainFrame};
use metrics_eval::{mean_std, phase_scores};
use serde::{Deserialize, Serialize};
use synth_corpus::{Dataset, VideoAnnotations};
use temporal_hhmm::{train_hhmm, OnlineDecoder};
use tensor_net::container;

use crate::config::ExperimentConfig;
use crate::error::{PipelineError, Result};
use crate::pipeline::{load_dataset, train_run};

/// Per-run scores of one variant in one decoding mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantScores {
    pub variant: String,
    pub mode: String,
    /// One entry per run.
    pub accuracy: Vec<f64>,
    pub mean_precision: Vec<f64>,
    pub mean_recall: Vec<f64>,
}

pub const VARIANT_NAMES: [&str; 4] = [
    "tool-binary",
    "fc7-single-task",
    "fc8-multi-task",
    "fc7+gt-tools",
];

fn tool_vector(v: &VideoAnnotations) -> Vec<Vec<f64>> {
    v.frames
        .iter()
        .map(|f| f.tools.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn fc8_vectors(model: &EndoNetModel, v: &VideoAnnotations) -> Result<Vec<Vec<f64>>> {
    v.frames
        .iter()
        .map(|f| {
            model
                .extract(&f.observation)
                .map(|(feature, _, _)| feature.into_vec())
                .map_err(PipelineError::stage("extract"))
        })
        .collect()
}

fn fc7_vectors(model: &EndoNetModel, v: &VideoAnnotations) -> Result<Vec<Vec<f64>>> {
    v.frames
        .iter()
        .map(|f| {
            model
                .extract(&f.observation)
                .map(|(feature, _, _)| feature.backbone_slice().to_vec())
                .map_err(PipelineError::stage("extract"))
        })
        .collect()
}

fn fc7_plus_tools(model: &EndoNetModel, v: &VideoAnnotations) -> Result<Vec<Vec<f64>>> {
    v.frames
        .iter()
        .map(|f| {
            let (feature, _, _) = model
                .extract(&f.observation)
                .map_err(PipelineError::stage("extract"))?;
            let mut out = feature.backbone_slice().to_vec();
            out.extend(f.tools.iter().map(|&b| if b { 1.0 } else { 0.0 }));
            Ok(out)
        })
        .collect()
}

/// Full downstream chain for one feature set: SVM on the fine-tuning split,
/// HHMM on its confidences, decoding of the evaluation videos in both modes.
/// Returns ((precision, recall, accuracy) offline, (.., ..) online).
#[allow(clippy::type_complexity)]
fn evaluate_feature_set(
    config: &ExperimentConfig,
    dataset: &Dataset,
    features: &dyn Fn(&VideoAnnotations) -> Result<Vec<Vec<f64>>>,
    seed: u64,
) -> Result<([f64; 3], [f64; 3])> {
    let split = dataset.manifest.split.as_ref().expect("split ensured");
    let n_phases = dataset.manifest.vocabulary.n_phases();

    let mut train_feats = Vec::new();
    let mut train_labels = Vec::new();
    let mut train_seqs = Vec::new();
    let mut train_label_seqs = Vec::new();
    for id in &split.finetune {
        let video = dataset.video(id).expect("split id");
        let feats = features(video)?;
        train_feats.extend(feats.iter().cloned());
        train_labels.extend(video.frames.iter().map(|f| f.phase));
        train_seqs.push(feats);
        train_label_seqs.push(video.phase_labels());
    }

    let svm = train_ovr(
        &train_feats,
        &train_labels,
        n_phases,
        &TrainOptions {
            c: config.svm.c,
            epochs: config.svm.epochs,
            standardize: config.svm.standardize,
            seed,
        },
    )
    .map_err(PipelineError::stage("variant-svm"))?;

    let conf_seqs: Vec<Vec<Vec<f64>>> = train_seqs
        .iter()
        .map(|seq| {
            seq.iter()
                .map(|f| {
                    svm.score(f)
                        .map(classifier_svm::PhaseConfidence::into_vec)
                        .map_err(PipelineError::stage("variant-svm"))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let hhmm = train_hhmm(
        &conf_seqs,
        &train_label_seqs,
        n_phases,
        &config.hhmm.to_config(seed ^ 0xBB),
    )
    .map_err(PipelineError::stage("variant-hhmm"))?;

    let mut pooled: [(Vec<usize>, Vec<usize>); 2] = Default::default();
    let mut video_acc: [Vec<f64>; 2] = Default::default();
    for fold in &split.folds {
        for id in fold {
            let video = dataset.video(id).expect("split id");
            let feats = features(video)?;
            let confs: Vec<Vec<f64>> = feats
                .iter()
                .map(|f| {
                    svm.score(f)
                        .map(classifier_svm::PhaseConfidence::into_vec)
                        .map_err(PipelineError::stage("variant-svm"))
                })
                .collect::<Result<_>>()?;
            let truth = video.phase_labels();

            let offline = hhmm
                .decode_offline(&confs)
                .map_err(PipelineError::stage("variant-decode"))?;
            let mut decoder = OnlineDecoder::new(&hhmm);
            let mut online = Vec::with_capacity(confs.len());
            for c in &confs {
                online.push(
                    decoder
                        .step(c)
                        .map_err(PipelineError::stage("variant-decode"))?
                        .0,
                );
            }

            for (slot, predicted) in [offline.phases().to_vec(), online].into_iter().enumerate() {
                let s = phase_scores(&predicted, &truth, n_phases)
                    .map_err(PipelineError::stage("variant-scores"))?;
                video_acc[slot].push(s.accuracy);
                pooled[slot].0.extend(predicted);
                pooled[slot].1.extend(truth.iter().copied());
            }
        }
    }

    let mut out = [[0.0; 3]; 2];
    for slot in 0..2 {
        let s = phase_scores(&pooled[slot].0, &pooled[slot].1, n_phases)
            .map_err(PipelineError::stage("variant-scores"))?;
        let acc = video_acc[slot].iter().sum::<f64>() / video_acc[slot].len() as f64;
        out[slot] = [s.mean_precision, s.mean_recall, acc];
    }
    Ok((out[0], out[1]))
}

/// Evaluates all four feature variants across the configured runs and
/// writes `variants.{txt,tsv,json}` into the output directory.
pub fn feature_variants(config: &ExperimentConfig) -> Result<Vec<VariantScores>> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    fs::create_dir_all(&config.run.output)?;

    let mut scores: Vec<VariantScores> = VARIANT_NAMES
        .iter()
        .flat_map(|name| {
            ["offline", "online"].into_iter().map(move |mode| VariantScores {
                variant: name.to_string(),
                mode: mode.into(),
                accuracy: Vec::new(),
                mean_precision: Vec::new(),
                mean_recall: Vec::new(),
            })
        })
        .collect();

    for run in 0..config.run.runs {
        // The multi-task model comes from the regular run artifacts (training
        // them on demand); the single-task phase network is a variant-only
        // artifact trained with weights (0, 1) and otherwise identical seeds.
        // When the experiment itself is not configured multi-task, the
        // variant's (1,1) model gets its own artifact directory so the two
        // never alias.
        let mut multi_config = config.clone();
        multi_config.model.loss_a = 1.0;
        multi_config.model.loss_b = 1.0;
        if config.model.loss_a != 1.0 || config.model.loss_b != 1.0 {
            multi_config.run.output = config.run.output.join("variants-multitask");
        }
        let trained = train_run(&multi_config, &dataset, run)?;
        let multi = trained.model;

        let phase_only_path = trained.artifacts.dir.join("endonet-phase-only.json");
        let phase_only = if container::is_valid(
            &phase_only_path,
            endonet::MODEL_KIND,
            endonet::MODEL_VERSION,
        ) {
            EndoNetModel::load(&phase_only_path).map_err(PipelineError::stage("variant-finetune"))?
        } else {
            let split = dataset.manifest.split.as_ref().expect("split ensured");
            let frames: Vec<TrainFrame> = split
                .finetune
                .iter()
                .flat_map(|id| dataset.video(id).expect("split id").frames.iter())
                .map(|f| TrainFrame {
                    observation: f.observation.clone(),
                    tools: endonet::ToolTarget(f.tools),
                    phase: PhaseTarget::new(f.phase).expect("validated phase"),
                })
                .collect();
            let seed = crate::pipeline::finetune_seed(config.run.seed, run);
            let (model, _) = finetune(
                &config.net_config(),
                None,
                &frames,
                LossWeights::phase_only(),
                &config.schedule.to_schedule()?,
                seed,
            )
            .map_err(PipelineError::stage("variant-finetune"))?;
            model
                .save(&phase_only_path)
                .map_err(PipelineError::stage("variant-finetune"))?;
            model
        };

        let svm_seed = crate::pipeline::svm_seed(config.run.seed, run);
        let sets: Vec<(&str, Box<dyn Fn(&VideoAnnotations) -> Result<Vec<Vec<f64>>>>)> = vec![
            ("tool-binary", Box::new(|v: &VideoAnnotations| Ok(tool_vector(v)))),
            ("fc7-single-task", {
                let m = phase_only.clone();
                Box::new(move |v: &VideoAnnotations| fc7_vectors(&m, v))
            }),
            ("fc8-multi-task", {
                let m = multi.clone();
                Box::new(move |v: &VideoAnnotations| fc8_vectors(&m, v))
            }),
            ("fc7+gt-tools", {
                let m = multi.clone();
                Box::new(move |v: &VideoAnnotations| fc7_plus_tools(&m, v))
            }),
        ];

        for (name, feature_fn) in &sets {
            let (offline, online) = evaluate_feature_set(config, &dataset, feature_fn, svm_seed)?;
            for (mode, vals) in [("offline", offline), ("online", online)] {
                let slot = scores
                    .iter_mut()
                    .find(|s| s.variant == *name && s.mode == mode)
                    .unwrap();
                slot.mean_precision.push(vals[0]);
                slot.mean_recall.push(vals[1]);
                slot.accuracy.push(vals[2]);
            }
        }
    }

    // Render the comparison table.
    let mut text = format!(
        "Feature variants over {} run(s) (mean +/- std)\n",
        config.run.runs
    );
    let mut tsv = String::from("variant\tmode\tprecision\tprecision_std\trecall\trecall_std\taccuracy\taccuracy_std\n");
    for mode in ["offline", "online"] {
        text.push_str(&format!(
            "[{mode}]\n{:<18}  {:>16}  {:>14}  {:>14}\n",
            "Feature", "Avg. Precision", "Avg. Recall", "Accuracy"
        ));
        for name in VARIANT_NAMES {
            let s = scores
                .iter()
                .find(|s| s.variant == name && s.mode == mode)
                .unwrap();
            let (pm, ps) = mean_std(&s.mean_precision);
            let (rm, rs) = mean_std(&s.mean_recall);
            let (am, asd) = mean_std(&s.accuracy);
            text.push_str(&format!(
                "{name:<18}  {pm:>7.1} +/- {ps:<4.1}  {rm:>6.1} +/- {rs:<4.1}  {am:>6.1} +/- {asd:<4.1}\n"
            ));
            tsv.push_str(&format!(
                "{name}\t{mode}\t{pm:.6}\t{ps:.6}\t{rm:.6}\t{rs:.6}\t{am:.6}\t{asd:.6}\n"
            ));
        }
    }
    fs::write(config.run.output.join("variants.txt"), &text)?;
    fs::write(config.run.output.join("variants.tsv"), &tsv)?;
    fs::write(
        config.run.output.join("variants.json"),
        serde_json::to_string(&scores).expect("scores serialize"),
    )?;
    Ok(scores)
}
