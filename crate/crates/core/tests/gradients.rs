mod common;

use common::{numeric_gradients, relative_error, scalar_loss};
use ndarray::{array, Array2};
use rand::Rng;
use seqplace::neural::{
    cross_entropy_loss, model_backward, model_forward, model_forward_with_cache, softmax,
    AdamState, SequenceModel,
};
use seqplace::rng::seeded_rng;

fn random_case(seed: u64) -> (SequenceModel, Array2<f64>, usize) {
    let model = SequenceModel::init(2, 3, 5, 3, seed);
    let mut rng = seeded_rng(seed ^ 0x5eed);
    let window = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
    let label = rng.random_range(0..5);
    (model, window, label)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut worst = 0.0f64;
    for seed in 0..25 {
        let (model, window, label) = random_case(seed);
        let (_, cache) = model_forward_with_cache(&model, window.view()).unwrap();
        let analytic = model_backward(&model, window.view(), label, &cache).unwrap();
        let numeric = numeric_gradients(&model, &window, label, 1e-4);
        for (a, n) in analytic.slices().iter().zip(&numeric) {
            for (&a, &n) in a.iter().zip(n) {
                worst = worst.max(relative_error(a, n, 1e-6));
            }
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn scalar_oracle_agrees_with_forward() {
    for seed in 0..5 {
        let (model, window, label) = random_case(seed);
        let logits = model_forward(&model, window.view()).unwrap();
        let (loss, _) = cross_entropy_loss(logits.view(), label);
        assert!((loss - scalar_loss(&model, &window, label)).abs() < 1e-12);
    }
}

#[test]
fn zero_model_head_bias_gradient() {
    let mut model = SequenceModel::zeros(2, 3, 4, 2);
    model.head.bias = array![0.3, -1.0, 2.0, 0.5];
    let window = Array2::zeros((2, 4));
    let (_, cache) = model_forward_with_cache(&model, window.view()).unwrap();
    let grads = model_backward(&model, window.view(), 2, &cache).unwrap();
    let mut expected = softmax(model.head.bias.view());
    expected[2] -= 1.0;
    for (g, e) in grads.head.bias.iter().zip(&expected) {
        assert!((g - e).abs() < 1e-15);
    }
}

#[test]
fn dead_input_columns_get_zero_gradient() {
    let (model, mut window, label) = random_case(3);
    window.column_mut(1).fill(0.0);
    let (_, cache) = model_forward_with_cache(&model, window.view()).unwrap();
    let grads = model_backward(&model, window.view(), label, &cache).unwrap();
    assert!(grads.lstm.w_input.column(1).iter().all(|&g| g == 0.0));
    assert!(grads.lstm.w_input.column(0).iter().any(|&g| g != 0.0));
}

#[test]
fn stale_cache_is_rejected() {
    let (model, window, label) = random_case(1);
    let (_, cache) = model_forward_with_cache(&model, window.view()).unwrap();
    let longer = Array2::zeros((4, 4));
    assert!(model_backward(&model, longer.view(), label, &cache).is_err());
}

#[test]
fn adam_reduces_loss_on_a_fixed_batch() {
    for seed in 0..5 {
        let (mut model, window, label) = random_case(seed);
        let initial = scalar_loss(&model, &window, label);
        let shapes: Vec<usize> = model.param_slices().iter().map(|s| s.len()).collect();
        let mut adam = AdamState::new(&shapes, 0.01);
        for _ in 0..200 {
            let (_, cache) = model_forward_with_cache(&model, window.view()).unwrap();
            let grads = model_backward(&model, window.view(), label, &cache).unwrap();
            adam.update(&mut model.param_slices_mut(), &grads.slices());
        }
        assert!(scalar_loss(&model, &window, label) < initial);
    }
}
