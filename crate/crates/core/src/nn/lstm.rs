//! LSTM cell, directional sequence scans and exact BPTT for one direction.

use ndarray::{Array1, Array2, Axis};

use super::params::LstmLayerParams;

/// Hidden and cell state of one LSTM direction.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Array1<f64>,
    pub c: Array1<f64>,
}

impl CellState {
    pub fn zeros(hidden: usize) -> Self {
        CellState {
            h: Array1::zeros(hidden),
            c: Array1::zeros(hidden),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM step:
///   i = sigma(W_ii x + b_ii + W_hi h + b_hi)
///   f = sigma(W_if x + b_if + W_hf h + b_hf)
///   g = tanh (W_ig x + b_ig + W_hg h + b_hg)
///   o = sigma(W_io x + b_io + W_ho h + b_ho)
///   c' = f . c + i . g
///   h' = o . tanh(c')
pub fn lstm_cell_forward(
    x_t: &Array1<f64>,
    prev: &CellState,
    params: &LstmLayerParams,
) -> CellState {
    let i = (params.w_ii.dot(x_t) + &params.b_ii + params.w_hi.dot(&prev.h) + &params.b_hi)
        .mapv(sigmoid);
    let f = (params.w_if.dot(x_t) + &params.b_if + params.w_hf.dot(&prev.h) + &params.b_hf)
        .mapv(sigmoid);
    let g = (params.w_ig.dot(x_t) + &params.b_ig + params.w_hg.dot(&prev.h) + &params.b_hg)
        .mapv(f64::tanh);
    let o = (params.w_io.dot(x_t) + &params.b_io + params.w_ho.dot(&prev.h) + &params.b_ho)
        .mapv(sigmoid);
    let c = &f * &prev.c + &i * &g;
    let h = &o * &c.mapv(f64::tanh);
    CellState { h, c }
}

/// Per-timestep gate activations cached for the backward pass. All matrices
/// are hidden x L in input time order.
#[derive(Debug, Clone)]
pub struct ScanCache {
    pub i: Array2<f64>,
    pub f: Array2<f64>,
    pub g: Array2<f64>,
    pub o: Array2<f64>,
    pub c: Array2<f64>,
    pub h: Array2<f64>,
    pub direction: Direction,
}

fn scan_order(len: usize, direction: Direction) -> Box<dyn Iterator<Item = usize>> {
    match direction {
        Direction::Forward => Box::new(0..len),
        Direction::Backward => Box::new((0..len).rev()),
    }
}

/// Scans the columns of `x` (input_dim x L) in the given direction from a
/// zero initial state, caching gate activations. Output column t always
/// corresponds to input column t.
pub fn lstm_sequence_scan(
    x: &Array2<f64>,
    params: &LstmLayerParams,
    direction: Direction,
) -> ScanCache {
    let hidden = params.hidden();
    let len = x.ncols();

    // Input projections for the whole sequence at once; the hidden
    // contribution is added step by step.
    let zi = params.w_ii.dot(x) + &stack_bias(&params.b_ii, &params.b_hi, len);
    let zf = params.w_if.dot(x) + &stack_bias(&params.b_if, &params.b_hf, len);
    let zg = params.w_ig.dot(x) + &stack_bias(&params.b_ig, &params.b_hg, len);
    let zo = params.w_io.dot(x) + &stack_bias(&params.b_io, &params.b_ho, len);

    let mut cache = ScanCache {
        i: Array2::zeros((hidden, len)),
        f: Array2::zeros((hidden, len)),
        g: Array2::zeros((hidden, len)),
        o: Array2::zeros((hidden, len)),
        c: Array2::zeros((hidden, len)),
        h: Array2::zeros((hidden, len)),
        direction,
    };
    let mut h_prev = Array1::<f64>::zeros(hidden);
    let mut c_prev = Array1::<f64>::zeros(hidden);
    for t in scan_order(len, direction) {
        let i_t = (zi.column(t).to_owned() + params.w_hi.dot(&h_prev)).mapv(sigmoid);
        let f_t = (zf.column(t).to_owned() + params.w_hf.dot(&h_prev)).mapv(sigmoid);
        let g_t = (zg.column(t).to_owned() + params.w_hg.dot(&h_prev)).mapv(f64::tanh);
        let o_t = (zo.column(t).to_owned() + params.w_ho.dot(&h_prev)).mapv(sigmoid);
        let c_t = &f_t * &c_prev + &i_t * &g_t;
        let h_t = &o_t * &c_t.mapv(f64::tanh);
        cache.i.column_mut(t).assign(&i_t);
        cache.f.column_mut(t).assign(&f_t);
        cache.g.column_mut(t).assign(&g_t);
        cache.o.column_mut(t).assign(&o_t);
        cache.c.column_mut(t).assign(&c_t);
        cache.h.column_mut(t).assign(&h_t);
        h_prev = h_t;
        c_prev = c_t;
    }
    cache
}

fn stack_bias(b_i: &Array1<f64>, b_h: &Array1<f64>, len: usize) -> Array2<f64> {
    let combined = b_i + b_h;
    let mut out = Array2::zeros((combined.len(), len));
    for mut col in out.columns_mut() {
        col.assign(&combined);
    }
    out
}

/// Hidden states of a directional scan (hidden x L, time-aligned).
pub fn lstm_sequence_forward(
    x: &Array2<f64>,
    params: &LstmLayerParams,
    direction: Direction,
) -> Array2<f64> {
    lstm_sequence_scan(x, params, direction).h
}

/// BPTT through one directional scan. `d_h` holds the loss gradient with
/// respect to every output column. Returns parameter gradients and the
/// gradient with respect to `x`.
pub fn lstm_sequence_backward(
    x: &Array2<f64>,
    cache: &ScanCache,
    params: &LstmLayerParams,
    d_h: &Array2<f64>,
) -> (LstmLayerParams, Array2<f64>) {
    let hidden = params.hidden();
    let len = x.ncols();

    // Pre-activation gate gradients, accumulated per timestep.
    let mut da_i = Array2::<f64>::zeros((hidden, len));
    let mut da_f = Array2::<f64>::zeros((hidden, len));
    let mut da_g = Array2::<f64>::zeros((hidden, len));
    let mut da_o = Array2::<f64>::zeros((hidden, len));

    let order: Vec<usize> = scan_order(len, cache.direction).collect();
    let mut dh_carry = Array1::<f64>::zeros(hidden);
    let mut dc_carry = Array1::<f64>::zeros(hidden);
    for (step, &t) in order.iter().enumerate().rev() {
        let i_t = cache.i.column(t);
        let f_t = cache.f.column(t);
        let g_t = cache.g.column(t);
        let o_t = cache.o.column(t);
        let c_t = cache.c.column(t);
        let c_prev = if step == 0 {
            Array1::zeros(hidden)
        } else {
            cache.c.column(order[step - 1]).to_owned()
        };

        let tanh_c = c_t.mapv(f64::tanh);
        let dh = &d_h.column(t) + &dh_carry;
        let dc = &dc_carry + &(&dh * &o_t * &tanh_c.mapv(|v| 1.0 - v * v));
        let dao = &dh * &tanh_c * &o_t * &o_t.mapv(|v| 1.0 - v);
        let daf = &dc * &c_prev * &f_t * &f_t.mapv(|v| 1.0 - v);
        let dai = &dc * &g_t * &i_t * &i_t.mapv(|v| 1.0 - v);
        let dag = &dc * &i_t * &g_t.mapv(|v| 1.0 - v * v);

        dh_carry = params.w_hi.t().dot(&dai)
            + params.w_hf.t().dot(&daf)
            + params.w_hg.t().dot(&dag)
            + params.w_ho.t().dot(&dao);
        dc_carry = &dc * &f_t;

        da_i.column_mut(t).assign(&dai);
        da_f.column_mut(t).assign(&daf);
        da_g.column_mut(t).assign(&dag);
        da_o.column_mut(t).assign(&dao);
    }

    // h_prev(t) in scan order: zero at the scan start, h at the previous
    // scanned timestep otherwise.
    let mut h_prev = Array2::<f64>::zeros((hidden, len));
    for (step, &t) in order.iter().enumerate() {
        if step > 0 {
            let prev_col = cache.h.column(order[step - 1]).to_owned();
            h_prev.column_mut(t).assign(&prev_col);
        }
    }

    let mut grads = LstmLayerParams::zeros(params.input_dim(), hidden);
    grads.w_ii = da_i.dot(&x.t()).as_standard_layout().into_owned();
    grads.w_if = da_f.dot(&x.t()).as_standard_layout().into_owned();
    grads.w_ig = da_g.dot(&x.t()).as_standard_layout().into_owned();
    grads.w_io = da_o.dot(&x.t()).as_standard_layout().into_owned();
    grads.w_hi = da_i.dot(&h_prev.t()).as_standard_layout().into_owned();
    grads.w_hf = da_f.dot(&h_prev.t()).as_standard_layout().into_owned();
    grads.w_hg = da_g.dot(&h_prev.t()).as_standard_layout().into_owned();
    grads.w_ho = da_o.dot(&h_prev.t()).as_standard_layout().into_owned();
    grads.b_ii = da_i.sum_axis(Axis(1));
    grads.b_if = da_f.sum_axis(Axis(1));
    grads.b_ig = da_g.sum_axis(Axis(1));
    grads.b_io = da_o.sum_axis(Axis(1));
    // Each gate's two biases always enter as a sum, so their gradients match.
    grads.b_hi = grads.b_ii.clone();
    grads.b_hf = grads.b_if.clone();
    grads.b_hg = grads.b_ig.clone();
    grads.b_ho = grads.b_io.clone();

    let dx = params.w_ii.t().dot(&da_i)
        + params.w_if.t().dot(&da_f)
        + params.w_ig.t().dot(&da_g)
        + params.w_io.t().dot(&da_o);
    (grads, dx)
}

/// Forward and backward scans stacked: rows 0..hidden are the forward
/// output, rows hidden..2*hidden the backward output, time-aligned.
pub fn bilstm_forward(
    x: &Array2<f64>,
    fwd: &LstmLayerParams,
    bwd: &LstmLayerParams,
) -> Array2<f64> {
    let (a, b) = bilstm_scan(x, fwd, bwd);
    stack_outputs(&a.h, &b.h)
}

pub(crate) fn bilstm_scan(
    x: &Array2<f64>,
    fwd: &LstmLayerParams,
    bwd: &LstmLayerParams,
) -> (ScanCache, ScanCache) {
    (
        lstm_sequence_scan(x, fwd, Direction::Forward),
        lstm_sequence_scan(x, bwd, Direction::Backward),
    )
}

pub(crate) fn stack_outputs(top: &Array2<f64>, bottom: &Array2<f64>) -> Array2<f64> {
    let hidden = top.nrows();
    let len = top.ncols();
    let mut out = Array2::zeros((2 * hidden, len));
    out.slice_mut(ndarray::s![..hidden, ..]).assign(top);
    out.slice_mut(ndarray::s![hidden.., ..]).assign(bottom);
    out
}
