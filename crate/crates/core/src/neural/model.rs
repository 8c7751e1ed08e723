use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lstm::{cell_update, lstm_backward, lstm_forward_batch, Gate, LstmCache, LstmParams};
use crate::dataset::Traversal;
use crate::error::{argument, Error, Result};
use crate::matching::{MatchEntry, MatchReport, Polarity};

/// Linear output layer with one unit per reference frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// `N × H`
    pub weight: Array2<f64>,
    /// `N`
    pub bias: Array1<f64>,
}

impl HeadParams {
    pub fn zeros(classes: usize, hidden: usize) -> Self {
        Self {
            weight: Array2::zeros((classes, hidden)),
            bias: Array1::zeros(classes),
        }
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }
}

/// The learned matcher: LSTM over `[descriptor ‖ position]` windows and a
/// linear head scoring every reference place.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModel {
    pub lstm: LstmParams,
    pub head: HeadParams,
    pub d_s: usize,
    pub rng_seed: u64,
}

/// Gradients, shaped exactly like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub lstm: LstmParams,
    pub head: HeadParams,
}

impl Gradients {
    pub fn slices(&self) -> [&[f64]; 5] {
        [
            self.lstm.w_input.as_slice().expect("standard layout"),
            self.lstm.w_hidden.as_slice().expect("standard layout"),
            self.lstm.bias.as_slice().expect("standard layout"),
            self.head.weight.as_slice().expect("standard layout"),
            self.head.bias.as_slice().expect("standard layout"),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.lstm.w_input.as_slice_mut().expect("standard layout"),
            self.lstm.w_hidden.as_slice_mut().expect("standard layout"),
            self.lstm.bias.as_slice_mut().expect("standard layout"),
            self.head.weight.as_slice_mut().expect("standard layout"),
            self.head.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales so the global norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let norm = self.norm();
        if norm > max_norm {
            let scale = max_norm / norm;
            for s in self.slices_mut() {
                s.iter_mut().for_each(|g| *g *= scale);
            }
        }
    }
}

/// Forward activations for one batch.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    lstm: LstmCache,
    h_last: Array2<f64>,
}

impl SequenceModel {
    pub fn zeros(descriptor_dim: usize, hidden: usize, classes: usize, d_s: usize) -> Self {
        Self {
            lstm: LstmParams::zeros(descriptor_dim + 2, hidden),
            head: HeadParams::zeros(classes, hidden),
            d_s,
            rng_seed: 0,
        }
    }

    /// Uniform `[−1/√H, 1/√H]` initialization with forget-gate bias 1.
    /// Draws parameters in serialization order from `rng`.
    pub fn init_with_rng(
        descriptor_dim: usize,
        hidden: usize,
        classes: usize,
        d_s: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut model = Self::zeros(descriptor_dim, hidden, classes, d_s);
        let bound = 1.0 / (hidden as f64).sqrt();
        for s in model.param_slices_mut() {
            for v in s.iter_mut() {
                *v = bound * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        model.lstm.gate_bias_mut(Gate::Forget).fill(1.0);
        model
    }

    pub fn init(
        descriptor_dim: usize,
        hidden: usize,
        classes: usize,
        d_s: usize,
        seed: u64,
    ) -> Self {
        let mut rng = crate::rng::seeded_rng(seed);
        let mut model = Self::init_with_rng(descriptor_dim, hidden, classes, d_s, &mut rng);
        model.rng_seed = seed;
        model
    }

    pub fn descriptor_dim(&self) -> usize {
        self.lstm.input_dim() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.lstm.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.lstm.hidden_dim()
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter tensors in serialization order.
    pub fn param_slices(&self) -> [&[f64]; 5] {
        [
            self.lstm.w_input.as_slice().expect("standard layout"),
            self.lstm.w_hidden.as_slice().expect("standard layout"),
            self.lstm.bias.as_slice().expect("standard layout"),
            self.head.weight.as_slice().expect("standard layout"),
            self.head.bias.as_slice().expect("standard layout"),
        ]
    }

    pub fn param_slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.lstm.w_input.as_slice_mut().expect("standard layout"),
            self.lstm.w_hidden.as_slice_mut().expect("standard layout"),
            self.lstm.bias.as_slice_mut().expect("standard layout"),
            self.head.weight.as_slice_mut().expect("standard layout"),
            self.head.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    fn check_window(&self, window: ArrayView2<'_, f64>) -> Result<()> {
        if window.ncols() != self.input_dim() {
            return Err(argument(format!(
                "window has {} columns, model expects {} (descriptor {} + 2 position)",
                window.ncols(),
                self.input_dim(),
                self.descriptor_dim()
            )));
        }
        if window.nrows() == 0 {
            return Err(argument("window has no frames"));
        }
        Ok(())
    }

    /// Batched forward pass. `steps[t]` holds frame `t` of every window.
    /// Returns `B × N` logits.
    pub fn forward_batch(&self, steps: &[Array2<f64>]) -> Result<(Array2<f64>, ForwardCache)> {
        let batch = steps.first().map_or(0, |x| x.nrows());
        let zeros = Array2::zeros((batch, self.hidden_dim()));
        let (h_last, lstm) = lstm_forward_batch(&self.lstm, steps, zeros.view(), zeros.view())?;
        let mut logits = h_last.dot(&self.head.weight.t());
        logits += &self.head.bias;
        Ok((logits, ForwardCache { lstm, h_last }))
    }

    /// Gradients of the loss given `dlogits` (`B × N`, already including any
    /// batch averaging).
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        dlogits: ArrayView2<'_, f64>,
    ) -> Result<Gradients> {
        if dlogits.dim() != (cache.h_last.nrows(), self.classes()) {
            return Err(Error::Internal(
                "logit gradient does not match forward cache".into(),
            ));
        }
        let head = HeadParams {
            weight: dlogits.t().dot(&cache.h_last),
            bias: dlogits.sum_axis(Axis(0)),
        };
        let dh = dlogits.dot(&self.head.weight);
        let lstm = lstm_backward(&self.lstm, &cache.lstm, dh.view())?;
        Ok(Gradients { lstm, head })
    }
}

fn window_steps(window: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
    window
        .axis_iter(Axis(0))
        .map(|row| row.insert_axis(Axis(0)).to_owned())
        .collect()
}

/// Raw logits for one `d × (n + 2)` window (descriptor columns first).
pub fn model_forward(model: &SequenceModel, window: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    Ok(model_forward_with_cache(model, window)?.0)
}

pub fn model_forward_with_cache(
    model: &SequenceModel,
    window: ArrayView2<'_, f64>,
) -> Result<(Array1<f64>, ForwardCache)> {
    model.check_window(window)?;
    let (logits, cache) = model.forward_batch(&window_steps(window))?;
    Ok((logits.row(0).to_owned(), cache))
}

/// Gradients of `cross_entropy_loss(model_forward(window), label)`.
pub fn model_backward(
    model: &SequenceModel,
    window: ArrayView2<'_, f64>,
    label: usize,
    cache: &ForwardCache,
) -> Result<Gradients> {
    model.check_window(window)?;
    if cache.lstm.len() != window.nrows() || cache.lstm.batch_size() != 1 {
        return Err(Error::Internal(
            "forward cache was produced for a different window".into(),
        ));
    }
    if label >= model.classes() {
        return Err(argument(format!(
            "label {label} out of range for {} classes",
            model.classes()
        )));
    }
    let logits = cache.h_last.row(0).dot(&model.head.weight.t()) + &model.head.bias;
    let (_, dlogits) = cross_entropy_loss(logits.view(), label);
    model.backward_batch(cache, dlogits.insert_axis(Axis(0)).view())
}

/// Softmax cross-entropy `−log softmax(logits)[label]` and its gradient
/// `softmax(logits) − onehot(label)`.
pub fn cross_entropy_loss(logits: ArrayView1<'_, f64>, label: usize) -> (f64, Array1<f64>) {
    let probs = softmax(logits);
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss = log_sum - (logits[label] - max);
    let mut grad = probs;
    grad[label] -= 1.0;
    (loss, grad)
}

pub fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut e = logits.mapv(|z| (z - max).exp());
    let sum = e.sum();
    e /= sum;
    e
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: ArrayView1<'_, f64>) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// `T × (n + 2)` matrix of per-frame model inputs.
pub fn traversal_inputs(traversal: &Traversal) -> Array2<f64> {
    let n = traversal.descriptors().dim();
    let mut x = Array2::zeros((traversal.frame_count(), n + 2));
    x.slice_mut(s![.., ..n])
        .assign(&traversal.descriptors().to_f64());
    x.slice_mut(s![.., n..])
        .assign(&traversal.positions().data());
    x
}

/// Window of `d_s` frames ending at `end`; frames before 0 repeat frame 0.
pub fn causal_window(inputs: ArrayView2<'_, f64>, end: usize, d_s: usize) -> Array2<f64> {
    Array2::from_shape_fn((d_s, inputs.ncols()), |(k, j)| {
        inputs[[(end + k + 1).saturating_sub(d_s), j]]
    })
}

const INFER_CHUNK: usize = 256;

/// Activity profiles (`Q × N` softmax rows) and best matches for every query
/// frame, using causal windows of `d_s` frames.
pub fn infer(
    model: &SequenceModel,
    query: &Traversal,
    d_s: usize,
) -> Result<(Array2<f64>, MatchReport)> {
    if query.descriptors().dim() != model.descriptor_dim() {
        return Err(argument(format!(
            "query descriptors have dimension {}, model expects {}",
            query.descriptors().dim(),
            model.descriptor_dim()
        )));
    }
    if d_s == 0 {
        return Err(argument("sequence length must be at least 1"));
    }
    let hidden = model.hidden_dim();
    let inputs = traversal_inputs(query);
    // Input projections are shared by every window containing a frame.
    let mut projected = inputs.dot(&model.lstm.w_input.t());
    projected += &model.lstm.bias;

    let q_len = query.frame_count();
    let starts: Vec<usize> = (0..q_len).step_by(INFER_CHUNK).collect();
    let chunks: Vec<Array2<f64>> = starts
        .par_iter()
        .map(|&from| {
            let to = (from + INFER_CHUNK).min(q_len);
            let batch = to - from;
            let mut h = Array2::<f64>::zeros((batch, hidden));
            let mut c = Array2::<f64>::zeros((batch, hidden));
            for k in 0..d_s {
                let mut pre = Array2::from_shape_fn((batch, 4 * hidden), |(b, j)| {
                    projected[[(from + b + k + 1).saturating_sub(d_s), j]]
                });
                if k > 0 {
                    pre += &h.dot(&model.lstm.w_hidden.t());
                }
                let (h_next, c_next, _) = cell_update(&pre, c.view(), hidden);
                h = h_next;
                c = c_next;
            }
            let mut logits = h.dot(&model.head.weight.t());
            logits += &model.head.bias;
            for mut row in logits.axis_iter_mut(Axis(0)) {
                let p = softmax(row.view());
                row.assign(&p);
            }
            logits
        })
        .collect();

    let mut activity = Array2::zeros((q_len, model.classes()));
    for (&from, chunk) in starts.iter().zip(&chunks) {
        activity
            .slice_mut(s![from..from + chunk.nrows(), ..])
            .assign(chunk);
    }
    let entries = activity
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(q, row)| {
            let best_ref = argmax(row);
            MatchEntry {
                query: q,
                best_ref,
                score: row[best_ref],
            }
        })
        .collect();
    Ok((
        activity,
        MatchReport::new(entries, Polarity::HigherIsBetter),
    ))
}
