//! Parameter containers for the 2x BiLSTM + dense network.

use ndarray::{Array1, Array2};
use rand::Rng;

/// Weights and biases of one LSTM direction.
///
/// Naming follows the gate equations: `w_i*` multiply the input, `w_h*` the
/// previous hidden state; the gates are input (i), forget (f), cell (g) and
/// output (o). Both per-gate biases are kept separate to match the
/// checkpoint layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub w_ii: Array2<f64>,
    pub w_if: Array2<f64>,
    pub w_ig: Array2<f64>,
    pub w_io: Array2<f64>,
    pub w_hi: Array2<f64>,
    pub w_hf: Array2<f64>,
    pub w_hg: Array2<f64>,
    pub w_ho: Array2<f64>,
    pub b_ii: Array1<f64>,
    pub b_if: Array1<f64>,
    pub b_ig: Array1<f64>,
    pub b_io: Array1<f64>,
    pub b_hi: Array1<f64>,
    pub b_hf: Array1<f64>,
    pub b_hg: Array1<f64>,
    pub b_ho: Array1<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmLayerParams {
            w_ii: Array2::zeros((hidden, input_dim)),
            w_if: Array2::zeros((hidden, input_dim)),
            w_ig: Array2::zeros((hidden, input_dim)),
            w_io: Array2::zeros((hidden, input_dim)),
            w_hi: Array2::zeros((hidden, hidden)),
            w_hf: Array2::zeros((hidden, hidden)),
            w_hg: Array2::zeros((hidden, hidden)),
            w_ho: Array2::zeros((hidden, hidden)),
            b_ii: Array1::zeros(hidden),
            b_if: Array1::zeros(hidden),
            b_ig: Array1::zeros(hidden),
            b_io: Array1::zeros(hidden),
            b_hi: Array1::zeros(hidden),
            b_hf: Array1::zeros(hidden),
            b_hg: Array1::zeros(hidden),
            b_ho: Array1::zeros(hidden),
        }
    }

    /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per matrix; the
    /// forget-gate input bias starts at +1.
    pub fn init(rng: &mut impl Rng, input_dim: usize, hidden: usize) -> Self {
        let mut p = Self::zeros(input_dim, hidden);
        let mut fill = |m: &mut Array2<f64>| {
            let bound = 1.0 / (m.ncols() as f64).sqrt();
            m.mapv_inplace(|_| rng.random_range(-1.0..1.0) * bound);
        };
        fill(&mut p.w_ii);
        fill(&mut p.w_if);
        fill(&mut p.w_ig);
        fill(&mut p.w_io);
        fill(&mut p.w_hi);
        fill(&mut p.w_hf);
        fill(&mut p.w_hg);
        fill(&mut p.w_ho);
        p.b_if.fill(1.0);
        p
    }

    pub fn hidden(&self) -> usize {
        self.w_ii.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_ii.ncols()
    }

    /// Input-weight, hidden-weight matrices and biases in checkpoint order.
    pub fn mats(&self) -> [&Array2<f64>; 8] {
        [
            &self.w_ii, &self.w_if, &self.w_ig, &self.w_io, &self.w_hi, &self.w_hf, &self.w_hg,
            &self.w_ho,
        ]
    }

    pub fn biases(&self) -> [&Array1<f64>; 8] {
        [
            &self.b_ii, &self.b_if, &self.b_ig, &self.b_io, &self.b_hi, &self.b_hf, &self.b_hg,
            &self.b_ho,
        ]
    }

    /// All 16 tensors as flat mutable slices, matrices first then biases.
    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let LstmLayerParams {
            w_ii,
            w_if,
            w_ig,
            w_io,
            w_hi,
            w_hf,
            w_hg,
            w_ho,
            b_ii,
            b_if,
            b_ig,
            b_io,
            b_hi,
            b_hf,
            b_hg,
            b_ho,
        } = self;
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(16);
        for m in [w_ii, w_if, w_ig, w_io, w_hi, w_hf, w_hg, w_ho] {
            out.push(m.as_slice_mut().expect("standard layout"));
        }
        for b in [b_ii, b_if, b_ig, b_io, b_hi, b_hf, b_hg, b_ho] {
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out
    }
}

/// Full model: two BiLSTM layers, dense head, architecture descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layer1_fwd: LstmLayerParams,
    pub layer1_bwd: LstmLayerParams,
    pub layer2_fwd: LstmLayerParams,
    pub layer2_bwd: LstmLayerParams,
    /// classes x (2*hidden).
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
    pub input_dim: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl ModelParams {
    pub fn zeros(input_dim: usize, hidden: usize, classes: usize) -> Self {
        ModelParams {
            layer1_fwd: LstmLayerParams::zeros(input_dim, hidden),
            layer1_bwd: LstmLayerParams::zeros(input_dim, hidden),
            layer2_fwd: LstmLayerParams::zeros(2 * hidden, hidden),
            layer2_bwd: LstmLayerParams::zeros(2 * hidden, hidden),
            dense_w: Array2::zeros((classes, 2 * hidden)),
            dense_b: Array1::zeros(classes),
            input_dim,
            hidden,
            classes,
        }
    }

    pub fn init(rng: &mut impl Rng, input_dim: usize, hidden: usize, classes: usize) -> Self {
        let mut m = Self::zeros(input_dim, hidden, classes);
        m.layer1_fwd = LstmLayerParams::init(rng, input_dim, hidden);
        m.layer1_bwd = LstmLayerParams::init(rng, input_dim, hidden);
        m.layer2_fwd = LstmLayerParams::init(rng, 2 * hidden, hidden);
        m.layer2_bwd = LstmLayerParams::init(rng, 2 * hidden, hidden);
        let bound = 1.0 / (2.0 * hidden as f64).sqrt();
        m.dense_w.mapv_inplace(|_| rng.random_range(-1.0..1.0) * bound);
        m
    }

    /// Zero-valued gradients (or moments) shaped like this model.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim, self.hidden, self.classes)
    }

    pub fn layers(&self) -> [&LstmLayerParams; 4] {
        [
            &self.layer1_fwd,
            &self.layer1_bwd,
            &self.layer2_fwd,
            &self.layer2_bwd,
        ]
    }

    /// All parameter tensors as flat slices, in checkpoint order:
    /// four LSTM directions (each: 8 weight matrices row-major then 8
    /// biases), then dense weights and bias.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(4 * 16 + 2);
        for layer in self.layers() {
            for m in layer.mats() {
                out.push(m.as_slice().expect("standard layout"));
            }
            for b in layer.biases() {
                out.push(b.as_slice().expect("standard layout"));
            }
        }
        out.push(self.dense_w.as_slice().expect("standard layout"));
        out.push(self.dense_b.as_slice().expect("standard layout"));
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let ModelParams {
            layer1_fwd,
            layer1_bwd,
            layer2_fwd,
            layer2_bwd,
            dense_w,
            dense_b,
            ..
        } = self;
        let mut out = Vec::with_capacity(4 * 16 + 2);
        for layer in [layer1_fwd, layer1_bwd, layer2_fwd, layer2_bwd] {
            out.extend(layer.slices_mut());
        }
        out.push(dense_w.as_slice_mut().expect("standard layout"));
        out.push(dense_b.as_slice_mut().expect("standard layout"));
        out
    }

    /// Total parameter count.
    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// True when any parameter is NaN or infinite.
    pub fn any_non_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .any(|s| s.iter().any(|v| !v.is_finite()))
    }
}
