//! Full-network forward pass, exact BPTT gradients over a batch of patches.
//!
//! Architecture: BiLSTM -> ReLU -> dropout -> BiLSTM -> ReLU -> dropout ->
//! dense -> column softmax. Dropout only runs in training mode.

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::framing::Patch;
use crate::types::State;

use super::lstm::{bilstm_scan, lstm_sequence_backward, stack_outputs, ScanCache};
use super::ops::{
    cross_entropy_loss, dense_forward, dropout_mask, relu, row_sums, softmax_ce_dlogits,
    softmax_columns,
};
use super::params::ModelParams;

/// Forward mode: training applies dropout with the given probability.
pub enum ForwardMode<'a, R: Rng> {
    Train { p: f64, rng: &'a mut R },
    Infer,
}

/// Intermediate activations kept for the backward pass.
pub struct ModelCache {
    x: Array2<f64>,
    scan1_fwd: ScanCache,
    scan1_bwd: ScanCache,
    a1: Array2<f64>,
    mask1: Option<Array2<f64>>,
    x2: Array2<f64>,
    scan2_fwd: ScanCache,
    scan2_bwd: ScanCache,
    a2: Array2<f64>,
    mask2: Option<Array2<f64>>,
    hd: Array2<f64>,
    probs: Array2<f64>,
}

/// Runs the network over a q x L feature patch. Returns per-column class
/// probabilities and the cache needed by [`model_backward`].
pub fn model_forward<R: Rng>(
    features: &Array2<f64>,
    model: &ModelParams,
    mode: ForwardMode<'_, R>,
) -> Result<(Array2<f64>, ModelCache)> {
    if features.nrows() != model.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, model expects {}",
            features.nrows(),
            model.input_dim
        )));
    }
    let len = features.ncols();
    let two_h = 2 * model.hidden;

    let (mask1, mask2) = match mode {
        ForwardMode::Train { p, rng } if p > 0.0 => (
            Some(dropout_mask(two_h, len, p, rng)?),
            Some(dropout_mask(two_h, len, p, rng)?),
        ),
        ForwardMode::Train { p, .. } => {
            // p = 0 behaves exactly like inference.
            let _ = p;
            (None, None)
        }
        ForwardMode::Infer => (None, None),
    };

    let (scan1_fwd, scan1_bwd) = bilstm_scan(features, &model.layer1_fwd, &model.layer1_bwd);
    let a1 = stack_outputs(&scan1_fwd.h, &scan1_bwd.h);
    let mut x2 = relu(&a1);
    if let Some(m) = &mask1 {
        x2 = &x2 * m;
    }

    let (scan2_fwd, scan2_bwd) = bilstm_scan(&x2, &model.layer2_fwd, &model.layer2_bwd);
    let a2 = stack_outputs(&scan2_fwd.h, &scan2_bwd.h);
    let mut hd = relu(&a2);
    if let Some(m) = &mask2 {
        hd = &hd * m;
    }

    let logits = dense_forward(&hd, &model.dense_w, &model.dense_b);
    let probs = softmax_columns(&logits);
    let cache = ModelCache {
        x: features.clone(),
        scan1_fwd,
        scan1_bwd,
        a1,
        mask1,
        x2,
        scan2_fwd,
        scan2_bwd,
        a2,
        mask2,
        hd,
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

/// Inference-mode forward returning probabilities only.
pub fn model_infer(features: &Array2<f64>, model: &ModelParams) -> Result<Array2<f64>> {
    let (probs, _) = model_forward::<ChaCha8Rng>(features, model, ForwardMode::Infer)?;
    Ok(probs)
}

fn relu_backward(d: &Array2<f64>, pre: &Array2<f64>) -> Array2<f64> {
    let mut out = d.clone();
    out.zip_mut_with(pre, |dv, &a| {
        if a <= 0.0 {
            *dv = 0.0;
        }
    });
    out
}

/// Exact gradient of the per-patch mean cross-entropy with respect to all
/// model parameters, reusing the forward cache (including dropout masks).
pub fn model_backward(
    model: &ModelParams,
    cache: &ModelCache,
    labels: &[State],
) -> Result<ModelParams> {
    if labels.len() != cache.probs.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels vs {} output columns",
            labels.len(),
            cache.probs.ncols()
        )));
    }
    let hidden = model.hidden;

    let dlogits = softmax_ce_dlogits(&cache.probs, labels);
    let mut grads = model.zeros_like();
    grads.dense_w = dlogits.dot(&cache.hd.t()).as_standard_layout().into_owned();
    grads.dense_b = row_sums(&dlogits);

    let mut d_hd = model.dense_w.t().dot(&dlogits);
    if let Some(m) = &cache.mask2 {
        d_hd = &d_hd * m;
    }
    let d_a2 = relu_backward(&d_hd, &cache.a2);

    let d_a2_fwd = d_a2.slice(s![..hidden, ..]).to_owned();
    let d_a2_bwd = d_a2.slice(s![hidden.., ..]).to_owned();
    let (g2f, dx2_f) =
        lstm_sequence_backward(&cache.x2, &cache.scan2_fwd, &model.layer2_fwd, &d_a2_fwd);
    let (g2b, dx2_b) =
        lstm_sequence_backward(&cache.x2, &cache.scan2_bwd, &model.layer2_bwd, &d_a2_bwd);
    grads.layer2_fwd = g2f;
    grads.layer2_bwd = g2b;

    let mut d_x2 = dx2_f + dx2_b;
    if let Some(m) = &cache.mask1 {
        d_x2 = &d_x2 * m;
    }
    let d_a1 = relu_backward(&d_x2, &cache.a1);

    let d_a1_fwd = d_a1.slice(s![..hidden, ..]).to_owned();
    let d_a1_bwd = d_a1.slice(s![hidden.., ..]).to_owned();
    let (g1f, _) =
        lstm_sequence_backward(&cache.x, &cache.scan1_fwd, &model.layer1_fwd, &d_a1_fwd);
    let (g1b, _) =
        lstm_sequence_backward(&cache.x, &cache.scan1_bwd, &model.layer1_bwd, &d_a1_bwd);
    grads.layer1_fwd = g1f;
    grads.layer1_bwd = g1b;
    Ok(grads)
}

/// Gradient of the mean cross-entropy over a batch of patches, plus the
/// batch-mean loss. Dropout masks are drawn per patch from seeds taken off
/// `rng` in patch order, so the result is independent of evaluation order.
pub fn compute_gradients(
    model: &ModelParams,
    batch: &[&Patch],
    dropout_p: f64,
    rng: &mut impl Rng,
) -> Result<(ModelParams, f64)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let seeds: Vec<u64> = batch.iter().map(|_| rng.random()).collect();

    let mut total = model.zeros_like();
    let mut loss_sum = 0.0;
    for (patch, seed) in batch.iter().zip(seeds) {
        let labels = patch
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("training patch without labels".into()))?;
        let mut patch_rng = ChaCha8Rng::seed_from_u64(seed);
        let (probs, cache) = model_forward(
            &patch.features,
            model,
            ForwardMode::Train {
                p: dropout_p,
                rng: &mut patch_rng,
            },
        )?;
        loss_sum += cross_entropy_loss(&probs, labels)?;
        let grads = model_backward(model, &cache, labels)?;
        for (acc, g) in total.param_slices_mut().into_iter().zip(grads.param_slices()) {
            for (a, &v) in acc.iter_mut().zip(g) {
                *a += v;
            }
        }
    }
    let inv_b = 1.0 / batch.len() as f64;
    for s in total.param_slices_mut() {
        for v in s {
            *v *= inv_b;
        }
    }
    Ok((total, loss_sum * inv_b))
}

/// Batch-mean cross-entropy in inference mode (no dropout); used for
/// validation loss.
pub fn evaluate_loss(model: &ModelParams, patches: &[Patch]) -> Result<f64> {
    if patches.is_empty() {
        return Err(Error::InvalidArgument("no patches to evaluate".into()));
    }
    let mut sum = 0.0;
    for patch in patches {
        let labels = patch
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("patch without labels".into()))?;
        let probs = model_infer(&patch.features, model)?;
        sum += cross_entropy_loss(&probs, labels)?;
    }
    Ok(sum / patches.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ops::cross_entropy_loss;
    use rand::SeedableRng;

    fn tiny_model(seed: u64, input: usize, hidden: usize) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelParams::init(&mut rng, input, hidden, 4)
    }

    fn random_patch(seed: u64, input: usize, len: usize) -> Patch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = Array2::from_shape_fn((input, len), |_| rng.random_range(-1.0..1.0));
        let labels = (0..len)
            .map(|_| State::from_class_index(rng.random_range(0..4)).unwrap())
            .collect();
        Patch {
            features,
            labels: Some(labels),
            source_id: "t".into(),
            start: 0,
        }
    }

    #[test]
    fn zero_model_predicts_uniform() {
        let model = ModelParams::zeros(3, 2, 4);
        let x = Array2::from_elem((3, 5), 0.7);
        let probs = model_infer(&x, &model).unwrap();
        for v in probs.iter() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn train_without_dropout_equals_infer() {
        let model = tiny_model(1, 3, 2);
        let x = Array2::from_shape_fn((3, 6), |(r, c)| ((r * 7 + c) as f64).sin());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (train_probs, _) =
            model_forward(&x, &model, ForwardMode::Train { p: 0.0, rng: &mut rng }).unwrap();
        let infer_probs = model_infer(&x, &model).unwrap();
        assert_eq!(train_probs, infer_probs);
    }

    #[test]
    fn full_model_gradient_matches_finite_differences() {
        let (input, hidden, len) = (3, 2, 5);
        let model = tiny_model(3, input, hidden);
        let patch = random_patch(4, input, len);
        let labels = patch.labels.as_ref().unwrap();

        let (_, cache) =
            model_forward::<ChaCha8Rng>(&patch.features, &model, ForwardMode::Infer).unwrap();
        let grads = model_backward(&model, &cache, labels).unwrap();

        let loss_of = |m: &ModelParams| {
            let probs = model_infer(&patch.features, m).unwrap();
            cross_entropy_loss(&probs, labels).unwrap()
        };

        let delta = 1e-5;
        let analytic: Vec<Vec<f64>> = grads.param_slices().iter().map(|s| s.to_vec()).collect();
        let mut m = model.clone();
        for tensor_no in 0..analytic.len() {
            let n = analytic[tensor_no].len();
            for probe in [0, n / 2, n - 1] {
                let base = m.param_slices()[tensor_no][probe];
                m.param_slices_mut()[tensor_no][probe] = base + delta;
                let up = loss_of(&m);
                m.param_slices_mut()[tensor_no][probe] = base - delta;
                let down = loss_of(&m);
                m.param_slices_mut()[tensor_no][probe] = base;
                let fd = (up - down) / (2.0 * delta);
                let an = analytic[tensor_no][probe];
                let denom = fd.abs().max(an.abs()).max(1e-6);
                assert!(
                    (fd - an).abs() / denom < 1e-4,
                    "tensor {tensor_no} entry {probe}: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn batch_gradient_is_mean_of_patch_gradients() {
        let model = tiny_model(5, 2, 2);
        let patches: Vec<Patch> = (0..3).map(|i| random_patch(10 + i, 2, 4)).collect();
        let refs: Vec<&Patch> = patches.iter().collect();
        // p = 0 so the result is deterministic regardless of seed draws.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (batch_grads, batch_loss) = compute_gradients(&model, &refs, 0.0, &mut rng).unwrap();

        let mut sum = model.zeros_like();
        let mut loss_sum = 0.0;
        for p in &patches {
            let labels = p.labels.as_ref().unwrap();
            let (probs, cache) =
                model_forward::<ChaCha8Rng>(&p.features, &model, ForwardMode::Infer).unwrap();
            loss_sum += cross_entropy_loss(&probs, labels).unwrap();
            let g = model_backward(&model, &cache, labels).unwrap();
            for (acc, s) in sum.param_slices_mut().into_iter().zip(g.param_slices()) {
                for (a, &v) in acc.iter_mut().zip(s) {
                    *a += v;
                }
            }
        }
        for (a, b) in batch_grads.param_slices().iter().zip(sum.param_slices()) {
            for (x, &y) in a.iter().zip(b) {
                assert!((x - y / 3.0).abs() < 1e-12);
            }
        }
        assert!((batch_loss - loss_sum / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_gradients_deterministic_given_seed() {
        let model = tiny_model(6, 2, 2);
        let patches: Vec<Patch> = (0..2).map(|i| random_patch(20 + i, 2, 4)).collect();
        let refs: Vec<&Patch> = patches.iter().collect();
        let mut r1 = ChaCha8Rng::seed_from_u64(33);
        let mut r2 = ChaCha8Rng::seed_from_u64(33);
        let (g1, l1) = compute_gradients(&model, &refs, 0.3, &mut r1).unwrap();
        let (g2, l2) = compute_gradients(&model, &refs, 0.3, &mut r2).unwrap();
        assert_eq!(l1, l2);
        for (a, b) in g1.param_slices().iter().zip(g2.param_slices()) {
            assert_eq!(&a[..], &b[..]);
        }
    }

    #[test]
    fn evaluate_loss_of_zero_model_is_ln4() {
        let model = ModelParams::zeros(2, 2, 4);
        let patches: Vec<Patch> = (0..2).map(|i| random_patch(30 + i, 2, 6)).collect();
        let loss = evaluate_loss(&model, &patches).unwrap();
        assert!((loss - 4.0_f64.ln()).abs() < 1e-10);
    }
}
