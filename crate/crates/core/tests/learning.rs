use ndarray::Axis;
use seqplace::eval::{pr_curve, ToleranceRule};
use seqplace::matching::{difference_matrix, row_argmin, Metric};
use seqplace::neural::{
    causal_window, infer, model_forward, softmax, train, traversal_inputs, TrainConfig,
};
use seqplace::synthetic::{generate, generate_revisit};
use seqplace::{SequenceModel, SynthConfig};

fn small_train(d_s: usize, epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        d_s,
        epochs,
        hidden: 64,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn memorizes_a_short_traversal() {
    let pair = generate(&SynthConfig {
        frames: 50,
        seed: 11,
        ..SynthConfig::default()
    })
    .unwrap();
    let (model, curves) = train(&pair.reference, &small_train(4, 100, 7)).unwrap();
    assert_eq!(curves.epochs.len(), 100);
    assert!(curves.last().unwrap().accuracy >= 0.95);
    let (_, report) = infer(&model, &pair.reference, 4).unwrap();
    // Frames 0..3 never end a full training window, so only the 47
    // memorized places are scored.
    let memorized = &report.entries[3..];
    let hits = memorized.iter().filter(|e| e.best_ref == e.query).count();
    assert!(
        hits as f64 >= 0.95 * memorized.len() as f64,
        "{hits}/47 self-retrievals"
    );
}

#[test]
fn zero_epochs_returns_the_initialization() {
    let pair = generate(&SynthConfig {
        frames: 20,
        dim: 8,
        ..SynthConfig::default()
    })
    .unwrap();
    let cfg = small_train(3, 0, 99);
    let (model, curves) = train(&pair.reference, &cfg).unwrap();
    assert!(curves.epochs.is_empty());
    assert_eq!(model, SequenceModel::init(8, 64, 20, 3, 99));
}

#[test]
fn training_is_bitwise_deterministic() {
    let pair = generate(&SynthConfig {
        frames: 40,
        dim: 12,
        seed: 2,
        ..SynthConfig::default()
    })
    .unwrap();
    let cfg = small_train(3, 5, 17);
    let (a, ca) = train(&pair.reference, &cfg).unwrap();
    let (b, cb) = train(&pair.reference, &cfg).unwrap();
    assert_eq!(a, b);
    let strip = |c: &seqplace::TrainingCurves| {
        c.epochs
            .iter()
            .map(|r| (r.loss.to_bits(), r.accuracy.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&ca), strip(&cb));
    let (c, _) = train(&pair.reference, &TrainConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn infer_matches_per_window_forward() {
    let pair = generate(&SynthConfig {
        frames: 30,
        dim: 6,
        condition_noise: 0.2,
        ..SynthConfig::default()
    })
    .unwrap();
    let model = SequenceModel::init(6, 9, 30, 5, 4);
    let (activity, report) = infer(&model, &pair.query, 5).unwrap();
    let inputs = traversal_inputs(&pair.query);
    for q in 0..30 {
        let window = causal_window(inputs.view(), q, 5);
        let expected = softmax(model_forward(&model, window.view()).unwrap().view());
        for (a, e) in activity.row(q).iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert_eq!(
            report.entries[q].score,
            activity.row(q).fold(0.0, |m: f64, &v| m.max(v))
        );
    }
}

#[test]
fn activity_profile_shape_and_normalization() {
    let reference = generate(&SynthConfig {
        frames: 50,
        dim: 8,
        ..SynthConfig::default()
    })
    .unwrap()
    .reference;
    let query = generate(&SynthConfig {
        frames: 7,
        dim: 8,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap()
    .query;
    let (model, _) = train(&reference, &small_train(2, 1, 0)).unwrap();
    let (activity, report) = infer(&model, &query, 2).unwrap();
    assert_eq!(activity.dim(), (7, 50));
    assert_eq!(report.len(), 7);
    for row in activity.axis_iter(Axis(0)) {
        assert!((row.sum() - 1.0).abs() < 1e-6);
        assert!(row.iter().all(|&p| p > 0.0 && p < 1.0));
    }
    let wrong_dim = generate(&SynthConfig {
        frames: 7,
        dim: 9,
        ..SynthConfig::default()
    })
    .unwrap()
    .query;
    assert!(infer(&model, &wrong_dim, 2).is_err());
}

/// Exact-frame accuracy over both copies of an aliased segment.
fn aliased_accuracy(best_refs: &[usize], segment: usize, revisit_at: usize) -> f64 {
    let frames: Vec<usize> = (0..segment)
        .chain(revisit_at..revisit_at + segment)
        .collect();
    let hits = frames.iter().filter(|&&q| best_refs[q] == q).count();
    hits as f64 / frames.len() as f64
}

#[test]
fn positions_disambiguate_revisited_places() {
    let (segment, revisit_at) = (20, 80);
    let mut descriptor_only = Vec::new();
    let mut learned = Vec::new();
    for seed in 0..4 {
        let cfg = SynthConfig {
            frames: 140,
            dim: 32,
            condition_noise: 0.05,
            seed,
            ..SynthConfig::default()
        };
        let pair = generate_revisit(&cfg, revisit_at, segment).unwrap();
        let m = difference_matrix(
            pair.query.descriptors(),
            pair.reference.descriptors(),
            Metric::Cosine,
        )
        .unwrap();
        descriptor_only.push(aliased_accuracy(
            &row_argmin(&m).best_refs(),
            segment,
            revisit_at,
        ));
        let (model, _) = train(&pair.reference, &small_train(4, 60, seed)).unwrap();
        learned.push(aliased_accuracy(
            &infer(&model, &pair.query, 4).unwrap().1.best_refs(),
            segment,
            revisit_at,
        ));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (nn, deep) = (mean(&descriptor_only), mean(&learned));
    println!("aliased segment accuracy: descriptor-only {nn:.3}, learned {deep:.3}");
    assert!(nn <= 0.5, "descriptor-only accuracy {nn}");
    assert!(deep > nn);
}

#[test]
fn noise_free_self_match_is_perfect_for_the_learned_matcher() {
    let pair = generate(&SynthConfig {
        frames: 60,
        dim: 16,
        seed: 8,
        ..SynthConfig::default()
    })
    .unwrap();
    let (model, _) = train(&pair.reference, &small_train(2, 80, 1)).unwrap();
    let report = infer(&model, &pair.query, 2).unwrap().1;
    let delta = ToleranceRule::for_sequence_length(2).delta;
    assert_eq!(pr_curve(&report, delta).auc, 1.0);
}
