//! Glue from raw signal to features to per-sample state predictions.

use ndarray::Array2;

use crate::config::PipelineConfig;
use crate::dsp::{self, FeatureMatrix, FeatureStats};
use crate::error::{Error, Result};
use crate::framing;
use crate::io::resample;
use crate::nn::model::model_infer;
use crate::nn::params::ModelParams;
use crate::types::{LabelSequence, Signal, State};

/// Resamples to the pipeline rate, runs the synchrosqueezed transform,
/// and keeps the configured frequency band. One feature column per sample.
pub fn extract_features(signal: &Signal, cfg: &PipelineConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let resampled = resample::resample(signal, cfg.fs)?;
    if resampled.samples.is_empty() {
        return Err(Error::InvalidArgument(
            "signal resampled to zero length".into(),
        ));
    }
    let sst = dsp::fsst_kaiser(&resampled, cfg.window_len, cfg.kaiser_beta, cfg.nfft)?;
    dsp::select_band(&sst, cfg.band_low, cfg.band_high)
}

/// Per-sample class probability matrix (classes x T) for one recording.
///
/// Patches are taken on the configured grid; when the grid does not reach
/// the end of the recording an extra patch anchored at `T - L` is added so
/// every sample is covered, and overlaps are averaged.
pub fn segment_probs(
    features: &FeatureMatrix,
    stats: &FeatureStats,
    params: &ModelParams,
    cfg: &PipelineConfig,
) -> Result<Array2<f64>> {
    let t_len = features.p();
    let spec = framing::FramingSpec::new(cfg.patch_len, cfg.stride)?;
    if t_len < cfg.patch_len {
        return Err(Error::InvalidArgument(format!(
            "recording too short to segment: {} samples < patch length {}",
            t_len, cfg.patch_len
        )));
    }
    let mut starts = framing::frame(t_len, spec)?;
    let last_start = t_len - cfg.patch_len;
    if *starts.last().unwrap() != last_start {
        starts.push(last_start);
    }
    let std = dsp::standardize(features, stats)?;
    let mut pieces = Vec::with_capacity(starts.len());
    for &s in &starts {
        let x = std
            .values
            .slice(ndarray::s![.., s..s + cfg.patch_len])
            .to_owned();
        let probs = model_infer(&x, params)?;
        pieces.push((s, probs));
    }
    framing::stitch(&pieces, t_len)
}

/// Full prediction: probabilities reduced to a per-sample state sequence.
pub fn predict(
    features: &FeatureMatrix,
    stats: &FeatureStats,
    params: &ModelParams,
    cfg: &PipelineConfig,
) -> Result<(LabelSequence, Array2<f64>)> {
    let probs = segment_probs(features, stats, params, cfg)?;
    let states: Vec<State> = framing::probs_to_states(&probs);
    Ok((LabelSequence::new(states, cfg.fs), probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.patch_len = 500;
        cfg.stride = 250;
        cfg.hidden = 4;
        cfg
    }

    #[test]
    fn features_have_one_column_per_sample() {
        let cfg = small_cfg();
        let (signal, ..) = generate(&SynthConfig { n_cycles: 3, ..SynthConfig::default() }).unwrap();
        let f = extract_features(&signal, &cfg).unwrap();
        assert_eq!(f.q(), 44);
        assert_eq!(f.p(), signal.len());
    }

    #[test]
    fn features_resampled_to_pipeline_rate() {
        let cfg = small_cfg();
        let (signal, ..) = generate(&SynthConfig { fs: 2000.0, n_cycles: 3, ..SynthConfig::default() }).unwrap();
        let f = extract_features(&signal, &cfg).unwrap();
        let expect = (signal.len() as f64 * cfg.fs / 2000.0).round() as usize;
        assert_eq!(f.p(), expect);
    }

    #[test]
    fn segmentation_covers_every_sample() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = ModelParams::init(&mut rng, 44, cfg.hidden, 4);
        // 1234 is not on the stride grid: the tail patch must kick in.
        let t_len = 1234;
        let features = FeatureMatrix {
            values: ndarray::Array2::from_shape_fn((44, t_len), |(r, c)| {
                ((r * 31 + c) as f64 * 0.01).sin()
            }),
            bin_freqs: None,
            fs: cfg.fs,
        };
        let stats = FeatureStats { mean: vec![0.0; 44], std: vec![1.0; 44] };
        let (labels, probs) = predict(&features, &stats, &model, &cfg).unwrap();
        assert_eq!(labels.len(), t_len);
        assert_eq!(probs.ncols(), t_len);
        for c in 0..t_len {
            let s: f64 = probs.column(c).sum();
            assert!((s - 1.0).abs() < 1e-9, "column {c} sums to {s}");
        }
    }

    #[test]
    fn too_short_recording_rejected() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = ModelParams::init(&mut rng, 44, cfg.hidden, 4);
        let features = FeatureMatrix {
            values: ndarray::Array2::zeros((44, 100)),
            bin_freqs: None,
            fs: cfg.fs,
        };
        let stats = FeatureStats { mean: vec![0.0; 44], std: vec![1.0; 44] };
        assert!(segment_probs(&features, &stats, &model, &cfg).is_err());
    }
}
