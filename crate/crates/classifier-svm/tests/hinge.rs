//! Optimizer-level checks: the grid-search oracle, epoch monotonicity,
//! convergence against a longer reference run, and the one-vs-all
//! decomposition invariants.

use classifier_svm::{hinge_objective, train_ovr, OvrSvmModel, TrainOptions};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Well-separated 2-D clusters, one per class, on a circle of radius 10.
fn clusters(n_classes: usize, per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for class in 0..n_classes {
        let angle = class as f64 * std::f64::consts::TAU / n_classes as f64;
        for _ in 0..per_class {
            features.push(vec![
                10.0 * angle.cos() + noise.sample(&mut rng),
                10.0 * angle.sin() + noise.sample(&mut rng),
            ]);
            labels.push(class);
        }
    }
    (features, labels)
}

#[test]
fn separable_clusters_reach_perfect_training_accuracy() {
    let (features, labels) = clusters(7, 30, 3);
    let model = train_ovr(&features, &labels, 7, &TrainOptions::default()).unwrap();
    for (x, &l) in features.iter().zip(&labels) {
        let conf = model.score(x).unwrap();
        assert_eq!(conf.argmax(), l, "misclassified training point");
    }
}

#[test]
fn duplicating_every_point_leaves_the_decision_function_unchanged() {
    let (features, labels) = clusters(3, 20, 4);
    let mut doubled_f = features.clone();
    doubled_f.extend(features.iter().cloned());
    let mut doubled_l = labels.clone();
    doubled_l.extend(labels.iter().cloned());

    let base = train_ovr(&features, &labels, 3, &TrainOptions::default()).unwrap();
    let doubled = train_ovr(&doubled_f, &doubled_l, 3, &TrainOptions::default()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let probe = vec![rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0)];
        let a = base.score(&probe).unwrap();
        let b = doubled.score(&probe).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn tiny_1d_problem_matches_a_grid_search_over_w_and_b() {
    // Four points: -2, -1 negative; 1, 2 positive; C = 1. The objective
    // 0.5 w^2 + mean hinge is minimized at (w, b) = (0.5, 0).
    let features = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
    let labels = vec![0, 0, 1, 1];
    let targets = [-1.0, -1.0, 1.0, 1.0];

    let mut best = (f64::INFINITY, 0.0, 0.0);
    let steps = 4000;
    for wi in 0..=steps {
        let w = -2.0 + 4.0 * wi as f64 / steps as f64;
        for bi in 0..=steps {
            let b = -2.0 + 4.0 * bi as f64 / steps as f64;
            let obj = hinge_objective(&features, &targets, &[w], b, 1.0);
            if obj < best.0 {
                best = (obj, w, b);
            }
        }
    }

    let options = TrainOptions {
        standardize: false,
        epochs: 500,
        ..TrainOptions::default()
    };
    let model = train_ovr(&features, &labels, 2, &options).unwrap();
    // Classifier 1 is the positive-vs-negative problem above.
    let (w, b) = (model.weights[1][0], model.biases[1]);
    assert!((w - best.1).abs() < 1e-2, "w {w} vs grid {}", best.1);
    assert!((b - best.2).abs() < 1e-2, "b {b} vs grid {}", best.2);
    let trained_obj = hinge_objective(&features, &targets, &model.weights[1], b, 1.0);
    assert!((trained_obj - best.0).abs() < 1e-3);
}

#[test]
fn objective_never_increases_across_epochs() {
    let (features, labels) = clusters(4, 25, 6);
    let model = train_ovr(&features, &labels, 4, &TrainOptions::default()).unwrap();
    for trace in &model.objective_traces {
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective rose from {} to {}", w[0], w[1]);
        }
    }
}

#[test]
fn objective_is_within_1e3_relative_of_a_10x_reference_run() {
    let (features, labels) = clusters(5, 30, 7);
    let short = train_ovr(
        &features,
        &labels,
        5,
        &TrainOptions {
            epochs: 300,
            ..TrainOptions::default()
        },
    )
    .unwrap();
    let long = train_ovr(
        &features,
        &labels,
        5,
        &TrainOptions {
            epochs: 3000,
            ..TrainOptions::default()
        },
    )
    .unwrap();
    for (a, b) in short.objective_traces.iter().zip(&long.objective_traces) {
        let ja = *a.last().unwrap();
        let jb = *b.last().unwrap();
        assert!(
            (ja - jb).abs() <= 1e-3 * jb.abs().max(1e-12),
            "short {ja} vs long {jb}"
        );
    }
}

#[test]
fn permuting_other_labels_leaves_a_classifier_unchanged() {
    // Classifier for class 0 sees only "is class 0"; shuffling the labels
    // among the other classes must leave it bit-identical.
    let (features, labels) = clusters(4, 20, 8);
    let permuted: Vec<usize> = labels
        .iter()
        .map(|&l| match l {
            0 => 0,
            1 => 3,
            2 => 1,
            _ => 2,
        })
        .collect();
    let a = train_ovr(&features, &labels, 4, &TrainOptions::default()).unwrap();
    let b = train_ovr(&features, &permuted, 4, &TrainOptions::default()).unwrap();
    assert_eq!(a.weights[0], b.weights[0]);
    assert_eq!(a.biases[0], b.biases[0]);
}

#[test]
fn scoring_is_a_pure_function() {
    let (features, labels) = clusters(3, 15, 9);
    let model = train_ovr(&features, &labels, 3, &TrainOptions::default()).unwrap();
    let a = model.score(&features[0]).unwrap();
    let b = model.score(&features[0]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn models_round_trip_through_the_container() {
    let (features, labels) = clusters(3, 15, 10);
    let model = train_ovr(&features, &labels, 3, &TrainOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("svm.json");
    model.save(&path).unwrap();
    let loaded = OvrSvmModel::load(&path).unwrap();
    assert_eq!(model.weights, loaded.weights);
    assert_eq!(model.biases, loaded.biases);
    assert_eq!(
        model.score(&features[3]).unwrap(),
        loaded.score(&features[3]).unwrap()
    );
}
