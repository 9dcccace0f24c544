//! Experiment execution: fine-tune -> extract -> SVM -> HHMM -> decode ->
//! report, with per-stage artifact persistence, crash-resume, and multi-run
//! aggregation.

use std::fs;
use std::path::{Path, PathBuf};

use classifier_svm::{train_ovr, OvrSvmModel, TrainOptions};
use endonet::{
    finetune, loss_log_text, pretrain, EndoNetModel, PhaseTarget, ProxyTask,
    TrainFrame,
};
use metrics_eval::{
    average_precision, block_detection_report, mean_std, ribbon_tsv, select_threshold,
    BlockDetectionReport, BoundaryTable, EvalReport, MetricsError, DEFAULT_TOLERANCES,
};
use synth_corpus::{
    make_split, proxy_corpus, read_dataset, sample_corpus, write_dataset, Dataset, Manifest,
    ObservationModel, PhaseGrammar, PhaseVocabulary, ToolUsageProfile, VideoAnnotations, N_TOOLS,
    TOOL_NAMES,
};
use temporal_hhmm::{train_hhmm, Hhmm, OnlineDecoder};
use tensor_net::{container, NetworkState, SgdSchedule};

use crate::config::ExperimentConfig;
use crate::error::{PipelineError, Result};

const BACKBONE_KIND: &str = "network";
const GAP_SECONDS: usize = 15;

fn run_seed(base: u64, run: usize) -> u64 {
    base ^ (run as u64).wrapping_mul(0x9E3779B97F4A7C15)
}

fn stage_seed(run_seed: u64, tag: u64) -> u64 {
    run_seed.wrapping_add(tag.wrapping_mul(0xD1B54A32D192ED03))
}

/// Seed the fine-tuning stage of run `run` uses (shared with the variant
/// comparison so single- and multi-task models differ only in their loss
/// weights).
pub fn finetune_seed(base: u64, run: usize) -> u64 {
    stage_seed(run_seed(base, run), 3)
}

/// Seed of the SVM stage of run `run`.
pub fn svm_seed(base: u64, run: usize) -> u64 {
    stage_seed(run_seed(base, run), 4)
}

/// Generates the synthetic dataset described by the config, including the
/// fine-tuning/evaluation split, and writes it to `dataset.path`.
pub fn generate_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let vocab = PhaseVocabulary::by_name(&config.dataset.vocabulary)
        .ok_or_else(|| PipelineError::Config("unknown vocabulary".into()))?;
    let usage = ToolUsageProfile::cholec80_default();
    let grammar = if config.dataset.vocabulary == "cholec80" {
        PhaseGrammar::cholec80_default()
    } else {
        PhaseGrammar::linear(vocab.n_phases())
    };
    let observation = match config.observation_kind() {
        synth_corpus::ObservationKind::Features { dim } => ObservationModel::features(
            vocab.n_phases(),
            dim,
            1.5,
            0.5,
            1.0,
            synth_corpus::DEFAULT_OBSERVATION_SEED,
        ),
        synth_corpus::ObservationKind::Image { height, .. } => {
            ObservationModel::image(height, 0.05)
        }
    };
    let videos = sample_corpus(
        &vocab,
        &usage,
        &grammar,
        &observation,
        config.dataset.scale,
        config.dataset.videos,
        config.run.seed,
    )
    .map_err(PipelineError::stage("generate"))?;
    let ids: Vec<String> = videos.iter().map(|v| v.id.clone()).collect();
    let split = make_split(
        &ids,
        config.dataset.finetune_fraction,
        config.dataset.folds,
        config.run.seed,
    )
    .map_err(PipelineError::stage("split"))?;
    let mut manifest = Manifest::new(vocab, config.observation_kind(), ids);
    manifest.split = Some(split);
    let dataset = Dataset { manifest, videos };
    write_dataset(&dataset, &config.dataset.path).map_err(PipelineError::stage("generate"))?;
    Ok(dataset)
}

/// Loads the dataset, validating it and ensuring a split exists.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let diags = synth_corpus::validate_dataset(&config.dataset.path);
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("{d}");
        }
        return Err(PipelineError::ValidationFailed(diags.len()));
    }
    let mut dataset =
        read_dataset(&config.dataset.path).map_err(PipelineError::stage("load-dataset"))?;
    if dataset.manifest.split.is_none() {
        let split = make_split(
            &dataset.manifest.videos,
            config.dataset.finetune_fraction,
            config.dataset.folds,
            config.run.seed,
        )
        .map_err(PipelineError::stage("split"))?;
        dataset.manifest.split = Some(split);
    }
    Ok(dataset)
}

/// File references of one run, all checksummed containers.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub backbone: Option<PathBuf>,
    pub model: PathBuf,
    pub svm: Option<PathBuf>,
    pub hhmm: PathBuf,
    pub loss_log: PathBuf,
}

impl RunArtifacts {
    fn for_run(output: &Path, run: usize) -> Self {
        let dir = output.join(format!("run-{run:03}"));
        RunArtifacts {
            backbone: Some(dir.join("backbone.json")),
            model: dir.join("endonet.json"),
            svm: Some(dir.join("svm.json")),
            hhmm: dir.join("hhmm.json"),
            loss_log: dir.join("loss_log.tsv"),
            dir,
        }
    }

    /// Every referenced artifact exists and passes its checksum.
    pub fn verify(&self) -> bool {
        let model_ok = container::is_valid(&self.model, endonet::MODEL_KIND, endonet::MODEL_VERSION);
        let svm_ok = self
            .svm
            .as_ref()
            .map(|p| container::is_valid(p, classifier_svm::SVM_KIND, classifier_svm::SVM_VERSION))
            .unwrap_or(true);
        let hhmm_ok = container::is_valid(
            &self.hhmm,
            temporal_hhmm::HHMM_KIND,
            temporal_hhmm::HHMM_VERSION,
        );
        model_ok && svm_ok && hhmm_ok
    }
}

/// In-memory handles to one run's trained stages.
pub struct TrainedRun {
    pub artifacts: RunArtifacts,
    pub model: EndoNetModel,
    pub svm: Option<OvrSvmModel>,
    pub hhmm: Hhmm,
}

fn frames_of<'a>(dataset: &'a Dataset, ids: &[String]) -> Vec<&'a VideoAnnotations> {
    ids.iter()
        .map(|id| dataset.video(id).expect("split id in dataset"))
        .collect()
}

fn train_frames(videos: &[&VideoAnnotations]) -> Vec<TrainFrame> {
    videos
        .iter()
        .flat_map(|v| v.frames.iter())
        .map(|f| TrainFrame {
            observation: f.observation.clone(),
            tools: endonet::ToolTarget(f.tools),
            phase: PhaseTarget::new(f.phase).expect("validated phase"),
        })
        .collect()
}

/// The feature each frame contributes to the SVM stage.
fn fc8_features(model: &EndoNetModel, video: &VideoAnnotations) -> Result<Vec<Vec<f64>>> {
    video
        .frames
        .iter()
        .map(|f| {
            model
                .extract(&f.observation)
                .map(|(feature, _, _)| feature.into_vec())
                .map_err(PipelineError::stage("extract"))
        })
        .collect()
}

/// Confidence vector for one frame: SVM margins over fc8, or the fc_phase
/// logits directly when the SVM stage is bypassed.
fn frame_confidence(
    model: &EndoNetModel,
    svm: Option<&OvrSvmModel>,
    observation: &[f64],
) -> Result<Vec<f64>> {
    let (feature, _, phase_logits) = model
        .extract(observation)
        .map_err(PipelineError::stage("extract"))?;
    match svm {
        Some(svm) => Ok(svm
            .score(feature.values())
            .map_err(PipelineError::stage("svm-score"))?
            .into_vec()),
        None => Ok(phase_logits.0.to_vec()),
    }
}

/// Trains (or resumes) all stages of one run.
pub fn train_run(config: &ExperimentConfig, dataset: &Dataset, run: usize) -> Result<TrainedRun> {
    let artifacts = RunArtifacts::for_run(&config.run.output, run);
    fs::create_dir_all(&artifacts.dir)?;
    let seed = run_seed(config.run.seed, run);
    let net_config = config.net_config();
    let split = dataset.manifest.split.as_ref().expect("split ensured");
    let finetune_videos = frames_of(dataset, &split.finetune);
    let n_phases = dataset.manifest.vocabulary.n_phases();

    // Stage 1: proxy pre-training (optional).
    let backbone: Option<NetworkState> = if config.pretrain.enabled {
        let path = artifacts.backbone.as_ref().unwrap();
        if container::is_valid(path, BACKBONE_KIND, tensor_net::NETWORK_VERSION) {
            Some(NetworkState::load(path).map_err(PipelineError::stage("pretrain"))?)
        } else {
            let task = proxy_corpus(
                &config.observation_kind(),
                config.pretrain.classes,
                config.pretrain.samples_per_class,
                stage_seed(seed, 1),
            );
            let schedule = SgdSchedule::new(
                config.pretrain.base_rate,
                0.1,
                config.pretrain.iterations.max(1),
                config.pretrain.iterations.max(1),
                config.pretrain.batch_size,
            )
            .map_err(PipelineError::stage("pretrain"))?;
            let (net, _) = pretrain(
                &net_config,
                &ProxyTask {
                    observations: task.observations,
                    labels: task.labels,
                    n_classes: task.n_classes,
                },
                &schedule,
                stage_seed(seed, 2),
            )
            .map_err(PipelineError::stage("pretrain"))?;
            net.save(path).map_err(PipelineError::stage("pretrain"))?;
            Some(net)
        }
    } else {
        None
    };

    // Stage 2: multi-task fine-tuning.
    let model = if container::is_valid(&artifacts.model, endonet::MODEL_KIND, endonet::MODEL_VERSION)
    {
        EndoNetModel::load(&artifacts.model).map_err(PipelineError::stage("finetune"))?
    } else {
        let frames = train_frames(&finetune_videos);
        let schedule = config.schedule.to_schedule()?;
        let (model, records) = finetune(
            &net_config,
            backbone.as_ref(),
            &frames,
            config.loss_weights(),
            &schedule,
            stage_seed(seed, 3),
        )
        .map_err(PipelineError::stage("finetune"))?;
        fs::write(&artifacts.loss_log, loss_log_text(&records))?;
        model.save(&artifacts.model).map_err(PipelineError::stage("finetune"))?;
        model
    };

    // Stage 3: one-vs-all SVM on the fc8 features of the fine-tuning split.
    let svm = if config.run.svm_stage {
        let path = artifacts.svm.as_ref().unwrap();
        if container::is_valid(path, classifier_svm::SVM_KIND, classifier_svm::SVM_VERSION) {
            Some(OvrSvmModel::load(path).map_err(PipelineError::stage("svm"))?)
        } else {
            let mut features = Vec::new();
            let mut labels = Vec::new();
            for video in &finetune_videos {
                features.extend(fc8_features(&model, video)?);
                labels.extend(video.frames.iter().map(|f| f.phase));
            }
            let svm = train_ovr(
                &features,
                &labels,
                n_phases,
                &TrainOptions {
                    c: config.svm.c,
                    epochs: config.svm.epochs,
                    standardize: config.svm.standardize,
                    seed: stage_seed(seed, 4),
                },
            )
            .map_err(PipelineError::stage("svm"))?;
            svm.save(path).map_err(PipelineError::stage("svm"))?;
            Some(svm)
        }
    } else {
        None
    };

    // Stage 4: HHMM over the training-split confidence sequences.
    let hhmm = if container::is_valid(
        &artifacts.hhmm,
        temporal_hhmm::HHMM_KIND,
        temporal_hhmm::HHMM_VERSION,
    ) {
        Hhmm::load(&artifacts.hhmm).map_err(PipelineError::stage("hhmm"))?
    } else {
        let mut sequences = Vec::new();
        let mut labels = Vec::new();
        for video in &finetune_videos {
            let confs = video
                .frames
                .iter()
                .map(|f| frame_confidence(&model, svm.as_ref(), &f.observation))
                .collect::<Result<Vec<_>>>()?;
            sequences.push(confs);
            labels.push(video.phase_labels());
        }
        let hhmm_config = config.hhmm.to_config(stage_seed(seed, 5));
        let hhmm = train_hhmm(&sequences, &labels, n_phases, &hhmm_config)
            .map_err(PipelineError::stage("hhmm"))?;
        hhmm.save(&artifacts.hhmm).map_err(PipelineError::stage("hhmm"))?;
        let names = dataset.manifest.vocabulary.ids();
        fs::write(artifacts.dir.join("topology.txt"), hhmm.topology.dump(&names))?;
        hhmm
    };

    Ok(TrainedRun {
        artifacts,
        model,
        svm,
        hhmm,
    })
}

/// Decodes one video in the given mode ("offline" uses Viterbi over the
/// whole sequence; anything else filters causally frame by frame).
pub fn decode_video(
    trained: &TrainedRun,
    video: &VideoAnnotations,
    mode: &str,
) -> Result<Vec<usize>> {
    match mode {
        "offline" => {
            let confs = video
                .frames
                .iter()
                .map(|f| frame_confidence(&trained.model, trained.svm.as_ref(), &f.observation))
                .collect::<Result<Vec<_>>>()?;
            let decoded = trained
                .hhmm
                .decode_offline(&confs)
                .map_err(PipelineError::stage("decode-offline"))?;
            Ok(decoded.phases().to_vec())
        }
        _ => {
            // Online mode goes through the strictly causal stream interface:
            // each frame is extracted, scored, and pushed one at a time.
            let mut decoder = OnlineDecoder::new(&trained.hhmm);
            let mut phases = Vec::with_capacity(video.frames.len());
            for frame in &video.frames {
                let conf =
                    frame_confidence(&trained.model, trained.svm.as_ref(), &frame.observation)?;
                let (phase, _) = decoder
                    .step(&conf)
                    .map_err(PipelineError::stage("decode-online"))?;
                phases.push(phase);
            }
            Ok(phases)
        }
    }
}

fn modes_of(config: &ExperimentConfig) -> Vec<&'static str> {
    match config.run.mode.as_str() {
        "offline" => vec!["offline"],
        "online" => vec!["online"],
        _ => vec!["offline", "online"],
    }
}

/// Decodes the evaluation folds and assembles the per-run report(s), one per
/// decoding mode.
pub fn evaluate_run(
    config: &ExperimentConfig,
    dataset: &Dataset,
    trained: &TrainedRun,
) -> Result<Vec<EvalReport>> {
    let split = dataset.manifest.split.as_ref().expect("split ensured");
    let n_phases = dataset.manifest.vocabulary.n_phases();
    let phase_names: Vec<String> = dataset
        .manifest
        .vocabulary
        .ids()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let tool_names: Vec<String> = TOOL_NAMES.iter().map(|s| s.to_string()).collect();

    // Evaluation videos in fold order.
    let eval_ids: Vec<String> = split.folds.iter().flatten().cloned().collect();
    let eval_videos = frames_of(dataset, &eval_ids);

    // Tool confidences are mode-independent; compute once.
    let mut tool_scores: Vec<Vec<f64>> = vec![Vec::new(); N_TOOLS];
    let mut tool_labels: Vec<Vec<bool>> = vec![Vec::new(); N_TOOLS];
    let mut per_video_tool: Vec<Vec<(Vec<bool>, Vec<f64>)>> = Vec::new();
    for video in &eval_videos {
        let mut rows = Vec::with_capacity(N_TOOLS);
        let mut confs: Vec<[f64; N_TOOLS]> = Vec::with_capacity(video.frames.len());
        for f in &video.frames {
            let (_, tools, _) = trained
                .model
                .extract(&f.observation)
                .map_err(PipelineError::stage("extract"))?;
            confs.push(tools.probabilities());
        }
        for tool in 0..N_TOOLS {
            let flags = video.tool_flags(tool);
            let scores: Vec<f64> = confs.iter().map(|c| c[tool]).collect();
            tool_scores[tool].extend(scores.iter().copied());
            tool_labels[tool].extend(flags.iter().copied());
            rows.push((flags, scores));
        }
        per_video_tool.push(rows);
    }
    let tool_ap: Vec<Option<f64>> = (0..N_TOOLS)
        .map(|t| match average_precision(&tool_scores[t], &tool_labels[t]) {
            Ok(ap) => Ok(Some(ap)),
            Err(MetricsError::NoPositiveLabels) => Ok(None),
            Err(e) => Err(PipelineError::stage("tool-ap")(e)),
        })
        .collect::<Result<_>>()?;

    // Block-detection thresholds come from the fine-tuning (validation)
    // split: the smallest threshold reaching the target precision.
    let mut thresholds: Vec<Option<f64>> = vec![None; N_TOOLS];
    {
        let finetune_videos = frames_of(dataset, &split.finetune);
        let mut val_scores: Vec<Vec<f64>> = vec![Vec::new(); N_TOOLS];
        let mut val_labels: Vec<Vec<bool>> = vec![Vec::new(); N_TOOLS];
        for video in &finetune_videos {
            for f in &video.frames {
                let (_, tools, _) = trained
                    .model
                    .extract(&f.observation)
                    .map_err(PipelineError::stage("extract"))?;
                let probs = tools.probabilities();
                for tool in 0..N_TOOLS {
                    val_scores[tool].push(probs[tool]);
                    val_labels[tool].push(f.tools[tool]);
                }
            }
        }
        for tool in 0..N_TOOLS {
            thresholds[tool] =
                select_threshold(&val_scores[tool], &val_labels[tool], config.run.block_precision);
        }
    }
    let mut blocks: Vec<BlockDetectionReport> = (0..N_TOOLS)
        .map(|_| BlockDetectionReport::empty_report())
        .collect();
    for rows in &per_video_tool {
        for (tool, (flags, scores)) in rows.iter().enumerate() {
            if let Some(threshold) = thresholds[tool] {
                let report = block_detection_report(flags, scores, threshold, GAP_SECONDS);
                blocks[tool].merge(&report);
            }
        }
    }

    let mut reports = Vec::new();
    for mode in modes_of(config) {
        let mut pooled_pred = Vec::new();
        let mut pooled_truth = Vec::new();
        let mut per_video_accuracy = Vec::new();
        let mut boundary = BoundaryTable::new(n_phases, &DEFAULT_TOLERANCES);
        let mut ribbon_entries = Vec::new();
        for video in &eval_videos {
            let predicted = decode_video(trained, video, mode)?;
            let truth = video.phase_labels();
            let scores = metrics_eval::phase_scores(&predicted, &truth, n_phases)
                .map_err(PipelineError::stage("phase-scores"))?;
            per_video_accuracy.push((video.id.clone(), scores.accuracy));
            if mode == "offline" {
                boundary
                    .add(&predicted, &truth)
                    .map_err(PipelineError::stage("boundary"))?;
            }
            ribbon_entries.push((video.id.clone(), truth.clone(), predicted.clone()));
            pooled_pred.extend(predicted);
            pooled_truth.extend(truth);
        }
        let phases = metrics_eval::phase_scores(&pooled_pred, &pooled_truth, n_phases)
            .map_err(PipelineError::stage("phase-scores"))?;
        let mean_video_accuracy =
            per_video_accuracy.iter().map(|(_, a)| *a).sum::<f64>() / per_video_accuracy.len() as f64;

        let report = EvalReport {
            mode: mode.to_string(),
            tool_names: tool_names.clone(),
            phase_names: phase_names.clone(),
            tool_ap: tool_ap.clone(),
            phases,
            per_video_accuracy,
            mean_video_accuracy,
            boundary: (mode == "offline").then(|| boundary.clone()),
            blocks: blocks.clone(),
            block_thresholds: thresholds.clone(),
        };
        let stem = trained.artifacts.dir.join(format!("report-{mode}"));
        fs::write(stem.with_extension("txt"), report.text())?;
        fs::write(stem.with_extension("tsv"), report.tsv())?;
        fs::write(
            stem.with_extension("json"),
            serde_json::to_string(&report).expect("report serializes"),
        )?;
        fs::write(
            trained.artifacts.dir.join(format!("ribbon-{mode}.tsv")),
            ribbon_tsv(&ribbon_entries),
        )?;
        reports.push(report);
    }
    Ok(reports)
}

/// Aggregate of one metric across runs.
fn aggregate_line(label: &str, values: &[f64]) -> String {
    let (mean, std) = mean_std(values);
    format!("{label}\t{mean:.4}\t{std:.4}\n")
}

/// Renders and writes the aggregate (mean +/- std across runs) report.
/// Returns the text form.
pub fn write_aggregate(
    config: &ExperimentConfig,
    reports_per_run: &[Vec<EvalReport>],
) -> Result<String> {
    let mut text = format!(
        "Aggregate over {} run(s) (mean +/- std)\n",
        reports_per_run.len()
    );
    let mut tsv = String::from("mode\tmetric\tmean\tstd\n");
    for (m, mode) in modes_of(config).iter().enumerate() {
        let acc: Vec<f64> = reports_per_run
            .iter()
            .map(|r| r[m].mean_video_accuracy)
            .collect();
        let prec: Vec<f64> = reports_per_run
            .iter()
            .map(|r| r[m].phases.mean_precision)
            .collect();
        let rec: Vec<f64> = reports_per_run
            .iter()
            .map(|r| r[m].phases.mean_recall)
            .collect();
        let (am, as_) = mean_std(&acc);
        let (pm, ps) = mean_std(&prec);
        let (rm, rs) = mean_std(&rec);
        text.push_str(&format!(
            "{mode:<8} precision {pm:6.2} +/- {ps:.2}  recall {rm:6.2} +/- {rs:.2}  accuracy {am:6.2} +/- {as_:.2}\n"
        ));
        tsv.push_str(&aggregate_line(&format!("{mode}\tprecision"), &prec));
        tsv.push_str(&aggregate_line(&format!("{mode}\trecall"), &rec));
        tsv.push_str(&aggregate_line(&format!("{mode}\taccuracy"), &acc));
    }
    // Mean AP across tools with a defined AP, averaged across runs.
    let mean_aps: Vec<f64> = reports_per_run
        .iter()
        .map(|r| {
            let aps: Vec<f64> = r[0].tool_ap.iter().flatten().map(|a| 100.0 * a).collect();
            if aps.is_empty() {
                0.0
            } else {
                aps.iter().sum::<f64>() / aps.len() as f64
            }
        })
        .collect();
    let (apm, aps) = mean_std(&mean_aps);
    text.push_str(&format!("tool mean AP {apm:6.2} +/- {aps:.2}\n"));
    tsv.push_str(&aggregate_line("tools\tmean_ap", &mean_aps));

    fs::create_dir_all(&config.run.output)?;
    fs::write(config.run.output.join("aggregate.txt"), &text)?;
    fs::write(config.run.output.join("aggregate.tsv"), &tsv)?;
    Ok(text)
}

/// Outcome of a full experiment: per-run artifacts and reports plus the
/// aggregate text.
pub struct ExperimentOutcome {
    pub runs: Vec<TrainedRun>,
    pub reports: Vec<Vec<EvalReport>>,
    pub aggregate: String,
}

/// Runs the whole pipeline for every configured run index and aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    fs::create_dir_all(&config.run.output)?;
    fs::write(
        config.run.output.join("config.resolved.toml"),
        config.resolved_toml(),
    )?;

    let mut runs = Vec::with_capacity(config.run.runs);
    let mut reports = Vec::with_capacity(config.run.runs);
    for run in 0..config.run.runs {
        let trained = train_run(config, &dataset, run)?;
        let run_reports = evaluate_run(config, &dataset, &trained)?;
        runs.push(trained);
        reports.push(run_reports);
    }
    let aggregate = write_aggregate(config, &reports)?;
    Ok(ExperimentOutcome {
        runs,
        reports,
        aggregate,
    })
}

/// Re-renders the aggregate from persisted per-run reports without
/// recomputation.
pub fn rerender_aggregate(config: &ExperimentConfig) -> Result<String> {
    let mut reports = Vec::new();
    for run in 0..config.run.runs {
        let artifacts = RunArtifacts::for_run(&config.run.output, run);
        let mut run_reports = Vec::new();
        for mode in modes_of(config) {
            let path = artifacts.dir.join(format!("report-{mode}.json"));
            let text = fs::read_to_string(&path).map_err(|e| {
                PipelineError::Config(format!("missing report {}: {e}", path.display()))
            })?;
            let report: EvalReport = serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            run_reports.push(report);
        }
        reports.push(run_reports);
    }
    write_aggregate(config, &reports)
}
