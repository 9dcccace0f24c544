//! Training-level behavior: transfer, ablation weights, extraction
//! structure, determinism, and persistence.

use endonet::{
    finetune, pretrain, windowed_means, EndoNetConfig, EndoNetModel, LossWeights,
    PhaseTarget, ProxyTask, Standardization, TrainFrame, FC_PHASE, FC_TOOL,
};
use synth_corpus::{
    proxy_corpus, sample_corpus, ObservationKind, ObservationModel, PhaseGrammar,
    PhaseVocabulary, ToolUsageProfile,
};
use tensor_net::{NetworkState, SgdSchedule};

const DIM: usize = 16;

fn corpus_frames(n_videos: usize, seed: u64) -> Vec<TrainFrame> {
    let vocab = PhaseVocabulary::cholec80();
    let usage = ToolUsageProfile::cholec80_default();
    let grammar = PhaseGrammar::cholec80_default();
    let obs = ObservationModel::default_features(7);
    sample_corpus(&vocab, &usage, &grammar, &obs, 0.05, n_videos, seed)
        .unwrap()
        .into_iter()
        .flat_map(|v| v.frames)
        .map(|f| TrainFrame {
            observation: f.observation,
            tools: endonet::ToolTarget(f.tools),
            phase: PhaseTarget::new(f.phase).unwrap(),
        })
        .collect()
}

fn quick_schedule(iterations: usize) -> SgdSchedule {
    SgdSchedule::new(1e-2, 0.1, iterations.max(1), iterations.max(1), 32).unwrap()
}

#[test]
fn extract_reexports_the_tool_logits_inside_the_feature() {
    let frames = corpus_frames(2, 1);
    let config = EndoNetConfig::for_features(DIM);
    let (model, _) = finetune(
        &config,
        None,
        &frames,
        LossWeights::multi_task(),
        &quick_schedule(50),
        7,
    )
    .unwrap();

    for frame in frames.iter().take(100) {
        let (feature, tools, _) = model.extract(&frame.observation).unwrap();
        assert_eq!(feature.width(), 64 + 7);
        assert_eq!(feature.tool_slice(), tools.0.as_slice());
        for p in tools.probabilities() {
            assert!(p > 0.0 && p < 1.0);
        }
    }
}

#[test]
fn finetuning_is_deterministic_per_seed() {
    let frames = corpus_frames(2, 2);
    let config = EndoNetConfig::for_features(DIM);
    let run = || {
        finetune(
            &config,
            None,
            &frames,
            LossWeights::multi_task(),
            &quick_schedule(60),
            11,
        )
        .unwrap()
        .0
        .net
        .flat_params()
    };
    assert_eq!(run(), run());
}

#[test]
fn tool_only_weights_leave_the_phase_head_untouched() {
    // With b = 0 no gradient reaches fc_phase (it is downstream of both
    // heads), so its parameters stay at their random initialization.
    let frames = corpus_frames(2, 3);
    let config = EndoNetConfig::for_features(DIM);
    let seed = 21;
    let init = NetworkState::init(config.full_spec(), seed).unwrap();
    let fc_phase = init.spec().layer_index(FC_PHASE).unwrap();
    let fc_tool = init.spec().layer_index(FC_TOOL).unwrap();

    let (model, _) = finetune(
        &config,
        None,
        &frames,
        LossWeights::tool_only(),
        &quick_schedule(40),
        seed,
    )
    .unwrap();
    assert_eq!(
        init.params(fc_phase)[0].data(),
        model.net.params(fc_phase)[0].data(),
        "phase head must stay at init when b = 0"
    );
    assert_ne!(
        init.params(fc_tool)[0].data(),
        model.net.params(fc_tool)[0].data(),
        "tool head must train when a = 1"
    );
}

#[test]
fn phase_only_weights_still_train_the_tool_layer_through_the_concat() {
    let frames = corpus_frames(2, 4);
    let config = EndoNetConfig::for_features(DIM);
    let seed = 22;
    let init = NetworkState::init(config.full_spec(), seed).unwrap();
    let fc_tool = init.spec().layer_index(FC_TOOL).unwrap();

    let (model, _) = finetune(
        &config,
        None,
        &frames,
        LossWeights::phase_only(),
        &quick_schedule(40),
        seed,
    )
    .unwrap();
    // fc_tool sits on the fc8 path, so the phase loss reaches it.
    assert_ne!(
        init.params(fc_tool)[0].data(),
        model.net.params(fc_tool)[0].data()
    );
}

#[test]
fn tool_output_ignores_the_phase_head_at_inference() {
    let frames = corpus_frames(2, 5);
    let config = EndoNetConfig::for_features(DIM);
    let (model, _) = finetune(
        &config,
        None,
        &frames,
        LossWeights::multi_task(),
        &quick_schedule(40),
        9,
    )
    .unwrap();

    let mut perturbed = model.clone();
    let fc_phase = perturbed.net.spec().layer_index(FC_PHASE).unwrap();
    for t in perturbed.net.params_mut(fc_phase) {
        for v in t.data_mut() {
            *v += 5.0;
        }
    }
    let (_, tools_a, phases_a) = model.extract(&frames[0].observation).unwrap();
    let (_, tools_b, phases_b) = perturbed.extract(&frames[0].observation).unwrap();
    assert_eq!(tools_a, tools_b);
    assert_ne!(phases_a, phases_b);
}

#[test]
fn pretraining_zero_iterations_returns_the_initialization() {
    let config = EndoNetConfig::for_features(DIM);
    let corpus = proxy_corpus(&ObservationKind::Features { dim: DIM }, 4, 10, 3);
    let task = ProxyTask {
        observations: corpus.observations,
        labels: corpus.labels,
        n_classes: 4,
    };
    let mut schedule = quick_schedule(1);
    schedule.total_iterations = 0;
    let (backbone, records) = pretrain(&config, &task, &schedule, 31).unwrap();
    assert!(records.is_empty());
    let fresh = NetworkState::init(config.backbone_spec(), 31).unwrap();
    assert_eq!(backbone.flat_params(), fresh.flat_params());
}

#[test]
fn pretraining_reduces_the_proxy_loss_and_beats_chance() {
    let config = EndoNetConfig::for_features(DIM);
    let n_classes = 5;
    // One corpus, split into train and held-out parts; the generated order
    // is already shuffled.
    let corpus = proxy_corpus(&ObservationKind::Features { dim: DIM }, n_classes, 150, 41);
    let n_train = corpus.observations.len() * 4 / 5;
    let task = ProxyTask {
        observations: corpus.observations[..n_train].to_vec(),
        labels: corpus.labels[..n_train].to_vec(),
        n_classes,
    };
    let held_out = (
        corpus.observations[n_train..].to_vec(),
        corpus.labels[n_train..].to_vec(),
    );
    let schedule = SgdSchedule::new(1e-2, 0.1, 400, 1000, 32).unwrap();
    let (_, records) = pretrain(&config, &task, &schedule, 5).unwrap();

    // Windowed loss is non-increasing in at least 90% of window steps.
    let windows = windowed_means(&records, 100);
    let drops = windows.windows(2).filter(|w| w[1] <= w[0] + 1e-9).count();
    assert!(
        drops as f64 >= 0.9 * (windows.len() - 1) as f64,
        "only {drops}/{} non-increasing windows: {windows:?}",
        windows.len() - 1
    );

    // Rebuild the trained head to measure held-out accuracy: retrain with
    // the same seed and keep the full network this time.
    let (full_backbone, _) = pretrain(&config, &task, &schedule, 5).unwrap();
    // The stripped backbone has no head, so measure accuracy via a 1-NN
    // style readout instead: nearest class-mean in fc7 space.
    let std = Standardization::fit(
        task.observations.iter().map(|o| o.as_slice()),
        &config.input_shape,
    );
    let embed = |obs: &[f64]| -> Vec<f64> {
        let input = tensor_net::Tensor::from_vec(
            &config.input_shape,
            std.apply(obs, &config.input_shape),
        )
        .unwrap();
        full_backbone.forward(&input).unwrap().last().data().to_vec()
    };
    let mut means = vec![vec![0.0; 64]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (o, &l) in task.observations.iter().zip(&task.labels) {
        let e = embed(o);
        for (m, v) in means[l].iter_mut().zip(&e) {
            *m += v;
        }
        counts[l] += 1;
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        for v in m.iter_mut() {
            *v /= c as f64;
        }
    }
    let mut correct = 0usize;
    for (o, &l) in held_out.0.iter().zip(&held_out.1) {
        let e = embed(o);
        let pred = (0..n_classes)
            .min_by(|&a, &b| {
                let da: f64 = means[a].iter().zip(&e).map(|(m, v)| (m - v) * (m - v)).sum();
                let db: f64 = means[b].iter().zip(&e).map(|(m, v)| (m - v) * (m - v)).sum();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        if pred == l {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / held_out.0.len() as f64;
    assert!(
        accuracy > 1.0 / n_classes as f64,
        "held-out proxy accuracy {accuracy} not above chance"
    );
}

#[test]
fn finetuning_loss_decreases_from_start_to_end() {
    let frames = corpus_frames(4, 6);
    let config = EndoNetConfig::for_features(DIM);
    let (_, records) = finetune(
        &config,
        None,
        &frames,
        LossWeights::multi_task(),
        &SgdSchedule::new(1e-2, 0.1, 300, 600, 32).unwrap(),
        13,
    )
    .unwrap();
    let windows = windowed_means(&records, 100);
    assert!(
        windows.last().unwrap() < &(windows[0] * 0.7),
        "loss did not clearly decrease: {windows:?}"
    );
}

#[test]
fn transfer_starts_from_the_pretrained_backbone() {
    let config = EndoNetConfig::for_features(DIM);
    let corpus = proxy_corpus(&ObservationKind::Features { dim: DIM }, 4, 40, 51);
    let task = ProxyTask {
        observations: corpus.observations,
        labels: corpus.labels,
        n_classes: 4,
    };
    let (backbone, _) = pretrain(&config, &task, &quick_schedule(100), 3).unwrap();

    let frames = corpus_frames(2, 7);
    let mut schedule = quick_schedule(1);
    schedule.total_iterations = 0;
    let (model, _) = finetune(
        &config,
        Some(&backbone),
        &frames,
        LossWeights::multi_task(),
        &schedule,
        99,
    )
    .unwrap();
    // With zero iterations the backbone parameters are exactly the
    // transferred ones.
    assert_eq!(model.net.params(0)[0].data(), backbone.params(0)[0].data());
}

#[test]
fn models_round_trip_with_their_header() {
    let frames = corpus_frames(2, 8);
    let config = EndoNetConfig::for_features(DIM);
    let weights = LossWeights { a: 1.0, b: 0.5 };
    let (model, _) = finetune(&config, None, &frames, weights, &quick_schedule(30), 17).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("endonet.json");
    model.save(&path).unwrap();
    let loaded = EndoNetModel::load(&path).unwrap();
    assert_eq!(loaded.loss_weights, weights);
    assert_eq!(loaded.feature_width, 64);
    let (fa, ta, pa) = model.extract(&frames[0].observation).unwrap();
    let (fb, tb, pb) = loaded.extract(&frames[0].observation).unwrap();
    assert_eq!(fa, fb);
    assert_eq!(ta, tb);
    assert_eq!(pa, pb);
}

#[test]
fn empty_corpus_is_rejected_before_training() {
    let config = EndoNetConfig::for_features(DIM);
    let err = finetune(
        &config,
        None,
        &[],
        LossWeights::multi_task(),
        &quick_schedule(10),
        0,
    )
    .unwrap_err();
    assert!(err.to_string().contains("empty"));
}
