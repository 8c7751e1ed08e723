use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use super::adam::AdamState;
use super::model::{argmax, cross_entropy_loss, traversal_inputs, SequenceModel};
use crate::dataset::{make_windows, SequenceWindow, Traversal};
use crate::error::{argument, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub d_s: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Global gradient-norm clip; off by default.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d_s: 10,
            epochs: 100,
            learning_rate: 0.01,
            hidden: 512,
            batch_size: 32,
            seed: 0,
            clip_norm: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's windows, in nats.
    pub loss: f64,
    /// Fraction of windows whose argmax equalled the label, measured on the
    /// pre-update logits of each batch.
    pub accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingCurves {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingCurves {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,accuracy,seconds\n");
        for r in &self.epochs {
            writeln!(out, "{},{},{},{}", r.epoch, r.loss, r.accuracy, r.seconds)
                .expect("writing to a String");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Gathers time-major batch inputs: `steps[t]` is `B × m`.
pub(crate) fn batch_steps(inputs: &Array2<f64>, windows: &[SequenceWindow]) -> Vec<Array2<f64>> {
    let d_s = windows[0].len;
    (0..d_s)
        .map(|t| {
            let rows: Vec<usize> = windows.iter().map(|w| w.start + t).collect();
            inputs.select(Axis(0), &rows)
        })
        .collect()
}

/// Trains a fresh model on one reference traversal; every window of
/// `cfg.d_s` frames is one example labelled with the index of its last frame.
pub fn train(reference: &Traversal, cfg: &TrainConfig) -> Result<(SequenceModel, TrainingCurves)> {
    if !reference.descriptors().is_normalized() {
        return Err(argument("reference descriptors must be L2-normalized"));
    }
    if cfg.batch_size == 0 || cfg.hidden == 0 {
        return Err(argument("batch size and hidden size must be positive"));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(argument("learning rate must be positive"));
    }
    let windows = make_windows(reference, cfg.d_s)?;
    let mut rng = crate::rng::seeded_rng(cfg.seed);
    let mut model = SequenceModel::init_with_rng(
        reference.descriptors().dim(),
        cfg.hidden,
        reference.frame_count(),
        cfg.d_s,
        &mut rng,
    );
    model.rng_seed = cfg.seed;
    let shapes: Vec<usize> = model.param_slices().iter().map(|s| s.len()).collect();
    let mut adam = AdamState::new(&shapes, cfg.learning_rate);
    let inputs = traversal_inputs(reference);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut curves = TrainingCurves::default();

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_index, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<SequenceWindow> = chunk.iter().map(|&i| windows[i]).collect();
            let steps = batch_steps(&inputs, &batch);
            let (logits, cache) = model.forward_batch(&steps)?;
            let scale = 1.0 / batch.len() as f64;
            let mut dlogits = Array2::zeros(logits.raw_dim());
            let mut batch_loss = 0.0;
            for (b, w) in batch.iter().enumerate() {
                let row = logits.row(b);
                let (loss, grad) = cross_entropy_loss(row, w.label);
                batch_loss += loss;
                if argmax(row) == w.label {
                    correct += 1;
                }
                dlogits.row_mut(b).assign(&(grad * scale));
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_index,
                    loss: batch_loss * scale,
                });
            }
            loss_sum += batch_loss;
            let mut grads = model.backward_batch(&cache, dlogits.view())?;
            if let Some(max_norm) = cfg.clip_norm {
                grads.clip_norm(max_norm);
            }
            let mut params = model.param_slices_mut();
            adam.update(&mut params, &grads.slices());
        }
        curves.epochs.push(EpochRecord {
            epoch,
            loss: loss_sum / windows.len() as f64,
            accuracy: correct as f64 / windows.len() as f64,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((model, curves))
}
