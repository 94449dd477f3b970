//! ADAM optimizer and absolute-value gradient clipping.

use crate::error::{Error, Result};

use super::params::ModelParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second-moment accumulators shaped like the model, plus the step
/// counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &ModelParams) -> Self {
        AdamState {
            m: model.zeros_like(),
            v: model.zeros_like(),
            t: 0,
        }
    }
}

/// Clips every gradient entry to [-threshold, threshold].
pub fn clip_gradients(grads: &mut ModelParams, threshold: f64) -> Result<()> {
    if threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "clip threshold must be > 0, got {threshold}"
        )));
    }
    for s in grads.param_slices_mut() {
        for g in s {
            *g = g.clamp(-threshold, threshold);
        }
    }
    Ok(())
}

/// One bias-corrected ADAM update, in place.
pub fn adam_step(
    model: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - ADAM_BETA1.powi(t);
    let bc2 = 1.0 - ADAM_BETA2.powi(t);

    let params = model.param_slices_mut();
    let gs = grads.param_slices();
    let ms = state.m.param_slices_mut();
    let vs = state.v.param_slices_mut();
    if params.len() != gs.len() {
        return Err(Error::DimensionMismatch(
            "gradient shape does not match model".into(),
        ));
    }
    for (((p, g), m), v) in params.into_iter().zip(gs).zip(ms).zip(vs) {
        if p.len() != g.len() {
            return Err(Error::DimensionMismatch(
                "gradient tensor size does not match model".into(),
            ));
        }
        for i in 0..p.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}
