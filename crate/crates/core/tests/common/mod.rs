//! Independent oracles shared by the integration and acceptance suites.
//! Nothing here calls into the code under test except for data accessors.
#![allow(dead_code, clippy::needless_range_loop)]

use ndarray::Array2;
use seqplace::neural::SequenceModel;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Cross-entropy of `model` on one window, evaluated with scalar loops.
/// Gate rows are stacked input, forget, cell, output.
pub fn scalar_loss(model: &SequenceModel, window: &Array2<f64>, label: usize) -> f64 {
    let h_dim = model.lstm.w_hidden.ncols();
    let m = window.ncols();
    let mut h = vec![0.0; h_dim];
    let mut c = vec![0.0; h_dim];
    for t in 0..window.nrows() {
        let mut pre = vec![0.0; 4 * h_dim];
        for (row, p) in pre.iter_mut().enumerate() {
            let mut acc = model.lstm.bias[row];
            for j in 0..m {
                acc += model.lstm.w_input[[row, j]] * window[[t, j]];
            }
            for j in 0..h_dim {
                acc += model.lstm.w_hidden[[row, j]] * h[j];
            }
            *p = acc;
        }
        for j in 0..h_dim {
            let i = sigmoid(pre[j]);
            let f = sigmoid(pre[h_dim + j]);
            let g = pre[2 * h_dim + j].tanh();
            let o = sigmoid(pre[3 * h_dim + j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }
    let classes = model.head.bias.len();
    let logits: Vec<f64> = (0..classes)
        .map(|k| {
            model.head.bias[k]
                + (0..h_dim)
                    .map(|j| model.head.weight[[k, j]] * h[j])
                    .sum::<f64>()
        })
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    log_sum - logits[label]
}

/// Central finite difference of [`scalar_loss`] for every parameter, in
/// checkpoint tensor order.
pub fn numeric_gradients(
    model: &SequenceModel,
    window: &Array2<f64>,
    label: usize,
    step: f64,
) -> Vec<Vec<f64>> {
    let mut probe = model.clone();
    let sizes: Vec<usize> = probe.param_slices().iter().map(|s| s.len()).collect();
    let mut out = Vec::new();
    for (tensor, &size) in sizes.iter().enumerate() {
        let mut grads = Vec::with_capacity(size);
        for idx in 0..size {
            let original = probe.param_slices()[tensor][idx];
            probe.param_slices_mut()[tensor][idx] = original + step;
            let plus = scalar_loss(&probe, window, label);
            probe.param_slices_mut()[tensor][idx] = original - step;
            let minus = scalar_loss(&probe, window, label);
            probe.param_slices_mut()[tensor][idx] = original;
            grads.push((plus - minus) / (2.0 * step));
        }
        out.push(grads);
    }
    out
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Best (reference, score) for each query row by listing every straight
/// line explicitly. Velocities are `0.8 + 0.04·i`, `i = 0..=10`.
pub fn brute_force_lines(m: &Array2<f64>, d_s: usize) -> Vec<(usize, f64)> {
    let (rows, cols) = m.dim();
    let velocities: Vec<f64> = (0..=10).map(|i| 0.8 + i as f64 * 0.04).collect();
    let penalties: Vec<f64> = (0..rows)
        .map(|q| {
            (0..cols)
                .map(|r| m[[q, r]])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    (0..rows)
        .map(|q| {
            let len = d_s.min(q + 1);
            let mut candidates: Vec<(usize, f64)> = Vec::new();
            for r in 0..cols {
                for &v in &velocities {
                    let line: Vec<(usize, Option<usize>)> = (0..len)
                        .map(|k| {
                            let col = (r as f64 - v * k as f64).round();
                            let inside = col >= 0.0 && col < cols as f64;
                            (q - k, inside.then_some(col as usize))
                        })
                        .collect();
                    let total: f64 = line
                        .iter()
                        .map(|&(row, col)| col.map_or(penalties[row], |c| m[[row, c]]))
                        .sum();
                    candidates.push((r, total / len as f64));
                }
            }
            let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            *candidates
                .iter()
                .filter(|c| c.1 == best)
                .min_by_key(|c| c.0)
                .expect("at least one candidate")
        })
        .collect()
}
