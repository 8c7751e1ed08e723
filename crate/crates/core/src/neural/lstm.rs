//! Single-layer LSTM with batched forward pass and backpropagation through
//! time.
//!
//! Gate weights are stored stacked: rows `[0, H)` belong to the input gate,
//! `[H, 2H)` the forget gate, `[2H, 3H)` the cell candidate and `[3H, 4H)`
//! the output gate. Row-major serialization of the stacked matrices therefore
//! lists `W_ii, W_if, W_ig, W_io` (and `W_h*`, `b_*`) in that order.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use crate::error::{argument, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H × m`
    pub w_input: Array2<f64>,
    /// `4H × H`
    pub w_hidden: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w_input: Array2::zeros((4 * hidden, input_dim)),
            w_hidden: Array2::zeros((4 * hidden, hidden)),
            bias: Array1::zeros(4 * hidden),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hidden.ncols()
    }

    fn gate_rows(&self, gate: Gate) -> std::ops::Range<usize> {
        let h = self.hidden_dim();
        let k = gate as usize;
        k * h..(k + 1) * h
    }

    /// `W_i*` for one gate, `H × m`.
    pub fn gate_input(&self, gate: Gate) -> ArrayView2<'_, f64> {
        self.w_input.slice(s![self.gate_rows(gate), ..])
    }

    /// `W_h*` for one gate, `H × H`.
    pub fn gate_hidden(&self, gate: Gate) -> ArrayView2<'_, f64> {
        self.w_hidden.slice(s![self.gate_rows(gate), ..])
    }

    pub fn gate_bias(&self, gate: Gate) -> ArrayView1<'_, f64> {
        self.bias.slice(s![self.gate_rows(gate)])
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> ndarray::ArrayViewMut1<'_, f64> {
        let rows = self.gate_rows(gate);
        self.bias.slice_mut(s![rows])
    }

    fn check_finite(&self) -> Result<()> {
        let finite = self
            .w_input
            .iter()
            .chain(&self.w_hidden)
            .chain(&self.bias)
            .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::Data("non-finite LSTM parameter".into()))
        }
    }
}

/// Activations from one time step, batched over rows.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub i: Array2<f64>,
    pub f: Array2<f64>,
    pub g: Array2<f64>,
    pub o: Array2<f64>,
    pub tanh_c: Array2<f64>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub(crate) steps: Vec<StepCache>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn batch_size(&self) -> usize {
        self.steps.first().map_or(0, |s| s.x.nrows())
    }

    pub fn input_dim(&self) -> usize {
        self.steps.first().map_or(0, |s| s.x.ncols())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Applies the gate nonlinearities to pre-activations `B × 4H` and advances
/// the cell state. Returns `(h, c, cache pieces)`.
pub(crate) fn cell_update(
    pre: &Array2<f64>,
    c_prev: ArrayView2<'_, f64>,
    hidden: usize,
) -> (Array2<f64>, Array2<f64>, [Array2<f64>; 5]) {
    let block = |k: usize| pre.slice(s![.., k * hidden..(k + 1) * hidden]);
    let i = block(0).mapv(sigmoid);
    let f = block(1).mapv(sigmoid);
    let g = block(2).mapv(f64::tanh);
    let o = block(3).mapv(sigmoid);
    let mut c = Array2::zeros(c_prev.raw_dim());
    Zip::from(&mut c)
        .and(&f)
        .and(c_prev)
        .and(&i)
        .and(&g)
        .for_each(|c, &f, &cp, &i, &g| *c = f * cp + i * g);
    let tanh_c = c.mapv(f64::tanh);
    let h = &o * &tanh_c;
    (h, c, [i, f, g, o, tanh_c])
}

/// Runs the recurrence over `steps` (each `B × m`) from `(h0, c0)`.
pub fn lstm_forward_batch(
    params: &LstmParams,
    steps: &[Array2<f64>],
    h0: ArrayView2<'_, f64>,
    c0: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, LstmCache)> {
    let hidden = params.hidden_dim();
    let Some(first) = steps.first() else {
        return Err(argument("LSTM input needs at least one time step"));
    };
    let batch = first.nrows();
    for x in steps {
        if x.dim() != (batch, params.input_dim()) {
            return Err(argument(format!(
                "LSTM step input is {:?}, expected ({batch}, {})",
                x.dim(),
                params.input_dim()
            )));
        }
    }
    if h0.dim() != (batch, hidden) || c0.dim() != (batch, hidden) {
        return Err(argument(
            "initial state shape does not match batch and hidden size",
        ));
    }
    if steps.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(Error::Data("non-finite LSTM input".into()));
    }
    params.check_finite()?;

    let mut h = h0.to_owned();
    let mut c = c0.to_owned();
    let mut cache = Vec::with_capacity(steps.len());
    for x in steps {
        let mut pre = x.dot(&params.w_input.t());
        pre += &h.dot(&params.w_hidden.t());
        pre += &params.bias;
        let (h_next, c_next, [i, f, g, o, tanh_c]) = cell_update(&pre, c.view(), hidden);
        cache.push(StepCache {
            x: x.clone(),
            h_prev: h,
            c_prev: c,
            i,
            f,
            g,
            o,
            tanh_c,
        });
        h = h_next;
        c = c_next;
    }
    Ok((h, LstmCache { steps: cache }))
}

/// Single-sequence forward pass: `inputs` is `d_s × m`.
pub fn lstm_forward(
    params: &LstmParams,
    inputs: ArrayView2<'_, f64>,
    h0: ArrayView1<'_, f64>,
    c0: ArrayView1<'_, f64>,
) -> Result<(Array1<f64>, LstmCache)> {
    let steps: Vec<Array2<f64>> = inputs
        .axis_iter(Axis(0))
        .map(|row| row.insert_axis(Axis(0)).to_owned())
        .collect();
    let (h, cache) = lstm_forward_batch(
        params,
        &steps,
        h0.insert_axis(Axis(0)),
        c0.insert_axis(Axis(0)),
    )?;
    Ok((h.row(0).to_owned(), cache))
}

/// Backpropagates `dh_last` (gradient w.r.t. the final hidden state,
/// `B × H`) through every step. Returns gradients shaped like `params`.
pub fn lstm_backward(
    params: &LstmParams,
    cache: &LstmCache,
    dh_last: ArrayView2<'_, f64>,
) -> Result<LstmParams> {
    let hidden = params.hidden_dim();
    let batch = cache.batch_size();
    if cache.is_empty()
        || cache.input_dim() != params.input_dim()
        || dh_last.dim() != (batch, hidden)
    {
        return Err(Error::Internal(
            "LSTM cache does not match parameters".into(),
        ));
    }
    let mut grads = LstmParams::zeros(params.input_dim(), hidden);
    let mut dh = dh_last.to_owned();
    let mut dc = Array2::<f64>::zeros((batch, hidden));
    let mut da = Array2::<f64>::zeros((batch, 4 * hidden));
    for step in cache.steps.iter().rev() {
        // dc accumulates the path through h = o ⊙ tanh(c).
        Zip::from(&mut dc)
            .and(&dh)
            .and(&step.o)
            .and(&step.tanh_c)
            .for_each(|dc, &dh, &o, &tc| *dc += dh * o * (1.0 - tc * tc));
        {
            let (mut da_i, rest) = da.view_mut().split_at(Axis(1), hidden);
            let (mut da_f, rest) = rest.split_at(Axis(1), hidden);
            let (mut da_g, mut da_o) = rest.split_at(Axis(1), hidden);
            Zip::from(&mut da_i)
                .and(&dc)
                .and(&step.g)
                .and(&step.i)
                .for_each(|d, &dc, &g, &i| *d = dc * g * i * (1.0 - i));
            Zip::from(&mut da_f)
                .and(&dc)
                .and(&step.c_prev)
                .and(&step.f)
                .for_each(|d, &dc, &cp, &f| *d = dc * cp * f * (1.0 - f));
            Zip::from(&mut da_g)
                .and(&dc)
                .and(&step.i)
                .and(&step.g)
                .for_each(|d, &dc, &i, &g| *d = dc * i * (1.0 - g * g));
            Zip::from(&mut da_o)
                .and(&dh)
                .and(&step.tanh_c)
                .and(&step.o)
                .for_each(|d, &dh, &tc, &o| *d = dh * tc * o * (1.0 - o));
        }
        grads.w_input += &da.t().dot(&step.x);
        grads.w_hidden += &da.t().dot(&step.h_prev);
        grads.bias += &da.sum_axis(Axis(0));
        dh = da.dot(&params.w_hidden);
        dc *= &step.f;
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalStream;
    use ndarray::Array1;

    fn random_params(m: usize, h: usize, seed: u64) -> LstmParams {
        let mut n = NormalStream::new(seed);
        let mut p = LstmParams::zeros(m, h);
        p.w_input.mapv_inplace(|_| 0.5 * n.next_normal());
        p.w_hidden.mapv_inplace(|_| 0.5 * n.next_normal());
        p.bias.mapv_inplace(|_| 0.5 * n.next_normal());
        p
    }

    #[test]
    fn zero_weights_are_a_fixed_point() {
        let p = LstmParams::zeros(3, 4);
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64 - 4.0);
        let (h, _) = lstm_forward(
            &p,
            x.view(),
            Array1::zeros(4).view(),
            Array1::zeros(4).view(),
        )
        .unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    // Written out gate by gate with explicit loops, independent of the
    // stacked-matrix implementation.
    fn reference_step(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hidden = h.len();
        let affine = |gate: Gate, u: usize| {
            let wi = p.gate_input(gate);
            let wh = p.gate_hidden(gate);
            let mut acc = p.gate_bias(gate)[u];
            for (j, xv) in x.iter().enumerate() {
                acc += wi[[u, j]] * xv;
            }
            for (j, hv) in h.iter().enumerate() {
                acc += wh[[u, j]] * hv;
            }
            acc
        };
        let logistic = |z: f64| 1.0 / (1.0 + (-z).exp());
        let mut h_new = vec![0.0; hidden];
        let mut c_new = vec![0.0; hidden];
        for u in 0..hidden {
            let i = logistic(affine(Gate::Input, u));
            let f = logistic(affine(Gate::Forget, u));
            let g = affine(Gate::Cell, u).tanh();
            let o = logistic(affine(Gate::Output, u));
            c_new[u] = f * c[u] + i * g;
            h_new[u] = o * c_new[u].tanh();
        }
        (h_new, c_new)
    }

    #[test]
    fn single_step_matches_direct_evaluation() {
        let p = random_params(3, 2, 1);
        let x = ndarray::array![[0.3, -1.2, 0.7]];
        let h0 = ndarray::array![0.1, -0.4];
        let c0 = ndarray::array![0.5, 0.2];
        let (h, _) = lstm_forward(&p, x.view(), h0.view(), c0.view()).unwrap();
        let (expected, _) = reference_step(&p, &[0.3, -1.2, 0.7], &[0.1, -0.4], &[0.5, 0.2]);
        for (a, b) in h.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_reference_recurrence() {
        let p = random_params(3, 2, 9);
        let mut n = NormalStream::new(10);
        let x = Array2::from_shape_fn((4, 3), |_| n.next_normal());
        let (h, _) = lstm_forward(
            &p,
            x.view(),
            Array1::zeros(2).view(),
            Array1::zeros(2).view(),
        )
        .unwrap();
        let (mut hr, mut cr) = (vec![0.0; 2], vec![0.0; 2]);
        for row in x.axis_iter(Axis(0)) {
            (hr, cr) = reference_step(&p, row.as_slice().unwrap(), &hr, &cr);
        }
        for (a, b) in h.iter().zip(&hr) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn batch_rows_are_independent() {
        let p = random_params(3, 4, 2);
        let mut n = NormalStream::new(3);
        let steps: Vec<Array2<f64>> = (0..3)
            .map(|_| Array2::from_shape_fn((5, 3), |_| n.next_normal()))
            .collect();
        let zeros = Array2::zeros((5, 4));
        let (h, _) = lstm_forward_batch(&p, &steps, zeros.view(), zeros.view()).unwrap();
        for b in 0..5 {
            let seq = Array2::from_shape_fn((3, 3), |(t, j)| steps[t][[b, j]]);
            let (hb, _) = lstm_forward(
                &p,
                seq.view(),
                Array1::zeros(4).view(),
                Array1::zeros(4).view(),
            )
            .unwrap();
            for (x, y) in h.row(b).iter().zip(hb.iter()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let p = LstmParams::zeros(3, 2);
        let x = Array2::zeros((2, 4));
        assert!(lstm_forward(
            &p,
            x.view(),
            Array1::zeros(2).view(),
            Array1::zeros(2).view()
        )
        .is_err());
        let empty = Array2::zeros((0, 3));
        assert!(lstm_forward(
            &p,
            empty.view(),
            Array1::zeros(2).view(),
            Array1::zeros(2).view()
        )
        .is_err());
    }
}
