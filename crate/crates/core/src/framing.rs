//! Fixed-length patch extraction and whole-signal reassembly.

use ndarray::{s, Array2};

use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};
use crate::types::{LabelSequence, State};

/// Patch length and stride, in timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramingSpec {
    pub patch_len: usize,
    pub stride: usize,
}

impl FramingSpec {
    pub fn new(patch_len: usize, stride: usize) -> Result<Self> {
        if patch_len < 1 {
            return Err(Error::InvalidArgument("patch_len must be >= 1".into()));
        }
        if stride < 1 || stride > patch_len {
            return Err(Error::InvalidArgument(format!(
                "stride must be in 1..=patch_len, got {stride} (patch_len {patch_len})"
            )));
        }
        Ok(FramingSpec { patch_len, stride })
    }
}

/// One fixed-length slice of a recording's features and (when training)
/// labels.
#[derive(Debug, Clone)]
pub struct Patch {
    /// q x L feature columns [start, start + L).
    pub features: Array2<f64>,
    /// Per-timestamp states, present for training patches.
    pub labels: Option<Vec<State>>,
    pub source_id: String,
    /// Timestamp offset of the first column.
    pub start: usize,
}

/// Patch start offsets: {i*tau : i = 0..=N} with N = floor((T-1-L)/tau).
/// A signal of exactly patch length yields the single offset 0.
pub fn frame(t_len: usize, spec: FramingSpec) -> Result<Vec<usize>> {
    let (l, tau) = (spec.patch_len, spec.stride);
    if t_len < l {
        return Err(Error::InvalidArgument(format!(
            "signal length {t_len} shorter than patch length {l}; recording must be skipped"
        )));
    }
    if t_len == l {
        return Ok(vec![0]);
    }
    let n = (t_len - 1 - l) / tau;
    Ok((0..=n).map(|i| i * tau).collect())
}

/// Splits a feature matrix (and optional labels) into patches.
pub fn cut(
    features: &FeatureMatrix,
    labels: Option<&LabelSequence>,
    spec: FramingSpec,
    source_id: &str,
) -> Result<Vec<Patch>> {
    let p = features.p();
    if let Some(lab) = labels {
        if lab.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "labels length {} != feature columns {}",
                lab.len(),
                p
            )));
        }
    }
    let offsets = frame(p, spec)?;
    Ok(offsets
        .into_iter()
        .map(|start| Patch {
            features: features
                .values
                .slice(s![.., start..start + spec.patch_len])
                .to_owned(),
            labels: labels.map(|lab| lab.states[start..start + spec.patch_len].to_vec()),
            source_id: source_id.to_string(),
            start,
        })
        .collect())
}

/// Averages overlapping per-patch class probabilities into one 4 x T matrix,
/// renormalized so each column sums to 1. Every timestamp must be covered.
pub fn stitch(patch_probs: &[(usize, Array2<f64>)], t_len: usize) -> Result<Array2<f64>> {
    let classes = patch_probs
        .first()
        .map(|(_, p)| p.nrows())
        .ok_or_else(|| Error::InvalidArgument("no patches to stitch".into()))?;
    let mut acc = Array2::<f64>::zeros((classes, t_len));
    let mut cover = vec![0usize; t_len];
    for (start, probs) in patch_probs {
        for (j, col) in probs.columns().into_iter().enumerate() {
            let t = start + j;
            if t >= t_len {
                return Err(Error::InvalidArgument(format!(
                    "patch at {start} extends past length {t_len}"
                )));
            }
            for c in 0..classes {
                acc[(c, t)] += col[c];
            }
            cover[t] += 1;
        }
    }
    if let Some(t) = cover.iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!(
            "timestamp {t} not covered by any patch"
        )));
    }
    for t in 0..t_len {
        let sum: f64 = (0..classes).map(|c| acc[(c, t)]).sum();
        for c in 0..classes {
            acc[(c, t)] /= sum;
        }
    }
    Ok(acc)
}

/// Argmax state per column of a stitched 4 x T probability matrix.
pub fn probs_to_states(probs: &Array2<f64>) -> Vec<State> {
    probs
        .columns()
        .into_iter()
        .map(|col| {
            let mut best = 0;
            for c in 1..col.len() {
                if col[c] > col[best] {
                    best = c;
                }
            }
            State::from_class_index(best).expect("class count is 4")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    // Independent enumeration of valid offsets per the framing rule.
    fn brute_force(t: usize, l: usize, tau: usize) -> Vec<usize> {
        if t == l {
            return vec![0];
        }
        let n = (t - 1 - l) / tau;
        (0..)
            .map(|i| i * tau)
            .take_while(|&o| o / tau <= n && o + l <= t)
            .collect()
    }

    #[test]
    fn frame_matches_enumeration() {
        for t in 1..=120usize {
            for l in 1..=t {
                for tau in 1..=l {
                    let spec = FramingSpec::new(l, tau).unwrap();
                    assert_eq!(frame(t, spec).unwrap(), brute_force(t, l, tau), "T={t} L={l} tau={tau}");
                }
            }
        }
    }

    #[test]
    fn thirty_five_second_recording_yields_33_patches() {
        // 35 s at 1000 Hz, patches of 2 s with 1 s stride.
        let spec = FramingSpec::new(2000, 1000).unwrap();
        let offsets = frame(35_000, spec).unwrap();
        assert_eq!(offsets.len(), 33);
        assert_eq!(offsets[0], 0);
        assert_eq!(*offsets.last().unwrap(), 32_000);
    }

    #[test]
    fn exact_length_gives_single_patch() {
        let spec = FramingSpec::new(500, 250).unwrap();
        assert_eq!(frame(500, spec).unwrap(), vec![0]);
        assert!(frame(499, spec).is_err());
    }

    #[test]
    fn cut_slices_features_and_labels() {
        let q = 3;
        let t = 10;
        let values = Array2::from_shape_fn((q, t), |(r, c)| (r * t + c) as f64);
        let fm = FeatureMatrix { values, bin_freqs: None, fs: 1000.0 };
        let labels = LabelSequence::new(vec![State::S1; t], 1000.0);
        let spec = FramingSpec::new(4, 2).unwrap();
        let patches = cut(&fm, Some(&labels), spec, "rec").unwrap();
        assert_eq!(patches.len(), 3); // offsets 0, 2, 4
        for p in &patches {
            assert_eq!(p.features.dim(), (q, 4));
            assert_eq!(p.labels.as_ref().unwrap().len(), 4);
            assert_eq!(p.features[[1, 0]], (t + p.start) as f64);
        }
    }

    #[test]
    fn stitch_averages_overlaps_and_renormalizes() {
        // Two 1-timestep patches overlapping at t=1 of a 3-long signal
        // won't cover everything -> coverage error.
        let p = Array2::from_shape_vec((4, 1), vec![0.25; 4]).unwrap();
        assert!(stitch(&[(0, p.clone()), (1, p.clone())], 3).is_err());

        // Full coverage: constant distributions average to themselves.
        let a = Array2::from_shape_vec((4, 2), vec![0.7, 0.7, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let b = Array2::from_shape_vec((4, 2), vec![0.1, 0.1, 0.7, 0.7, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let out = stitch(&[(0, a), (1, b)], 3).unwrap();
        assert_eq!(out.dim(), (4, 3));
        for c in 0..3 {
            let col: Array1<f64> = out.column(c).to_owned();
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
        // Middle column is the mean of (0.7,0.1,..) and (0.1,0.7,..) -> 0.4,0.4,0.1,0.1.
        assert!((out[[0, 1]] - 0.4).abs() < 1e-12);
        assert!((out[[1, 1]] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn probs_to_states_takes_argmax() {
        let mut p = Array2::zeros((4, 2));
        p[[2, 0]] = 0.9;
        p[[3, 1]] = 0.9;
        assert_eq!(probs_to_states(&p), vec![State::S2, State::Diastole]);
    }
}
