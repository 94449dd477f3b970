//! Pointwise layers: ReLU, column softmax, dense head, dropout masks and
//! cross-entropy loss.

use ndarray::{Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::types::State;

/// Loss guard inside the logarithm.
pub const CE_EPS: f64 = 1e-12;

/// Elementwise max(0, x).
pub fn relu(m: &Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v.max(0.0))
}

/// Column-wise softmax with max subtraction. Every column sums to 1.
pub fn softmax_columns(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut col in out.columns_mut() {
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        col.mapv_inplace(|v| (v - max).exp());
        let sum = col.sum();
        col.mapv_inplace(|v| v / sum);
    }
    out
}

/// W . H + b per column.
pub fn dense_forward(h: &Array2<f64>, w: &Array2<f64>, b: &ndarray::Array1<f64>) -> Array2<f64> {
    let mut out = w.dot(h);
    for mut col in out.columns_mut() {
        col += b;
    }
    out
}

/// Inverted-scaling dropout mask: entries are 0 with probability `p` and
/// 1/(1-p) otherwise, so inference needs no rescaling.
pub fn dropout_mask(
    rows: usize,
    cols: usize,
    p: f64,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "dropout probability must be in [0, 1), got {p}"
        )));
    }
    let keep = 1.0 / (1.0 - p);
    let mut mask = Array2::zeros((rows, cols));
    for v in mask.iter_mut() {
        *v = if rng.random::<f64>() < p { 0.0 } else { keep };
    }
    Ok(mask)
}

/// Mean negative log-likelihood over timesteps: -(1/L) sum ln(p[label_t, t] + eps).
pub fn cross_entropy_loss(probs: &Array2<f64>, labels: &[State]) -> Result<f64> {
    if probs.ncols() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probability columns vs {} labels",
            probs.ncols(),
            labels.len()
        )));
    }
    let l = labels.len() as f64;
    let mut loss = 0.0;
    for (t, &state) in labels.iter().enumerate() {
        loss -= (probs[(state.class_index(), t)] + CE_EPS).ln();
    }
    Ok(loss / l)
}

/// Gradient of the per-patch mean cross-entropy with respect to the dense
/// logits: (probs - onehot) / L.
pub fn softmax_ce_dlogits(probs: &Array2<f64>, labels: &[State]) -> Array2<f64> {
    let l = labels.len() as f64;
    let mut d = probs.clone();
    for (t, &state) in labels.iter().enumerate() {
        d[(state.class_index(), t)] -= 1.0;
    }
    d.mapv_inplace(|v| v / l);
    d
}

/// Row-sum helper used by dense bias gradients.
pub fn row_sums(m: &Array2<f64>) -> ndarray::Array1<f64> {
    m.sum_axis(Axis(1))
}
