//! Band selection and per-row standardization of time-frequency features.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::stft::SpectrogramComplex;

/// Lower clamp on per-row standard deviations.
pub const STD_EPS: f64 = 1e-8;

/// Real-valued feature matrix: retained frequency bins x timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// q x p matrix (rows = frequency bins, columns = timestamps).
    pub values: Array2<f64>,
    /// Center frequencies of the retained bins, Hz. `None` when the matrix
    /// was loaded from a feature file, which stores values only.
    pub bin_freqs: Option<Vec<f64>>,
    /// Sampling rate the features were computed at, Hz (0 when unknown).
    pub fs: f64,
}

impl FeatureMatrix {
    /// Number of feature rows.
    pub fn q(&self) -> usize {
        self.values.nrows()
    }

    /// Number of timestamps.
    pub fn p(&self) -> usize {
        self.values.ncols()
    }
}

/// Per-row mean and (population) standard deviation pooled over time columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    pub fn q(&self) -> usize {
        self.mean.len()
    }

    /// Pooled stats over the time columns of all given matrices.
    pub fn from_rows<'a, I>(matrices: I) -> Result<FeatureStats>
    where
        I: IntoIterator<Item = &'a Array2<f64>>,
        I::IntoIter: Clone,
    {
        let iter = matrices.into_iter();
        let mut rows = None;
        let mut total_cols = 0usize;
        for m in iter.clone() {
            match rows {
                None => rows = Some(m.nrows()),
                Some(q) if q != m.nrows() => {
                    return Err(Error::DimensionMismatch(format!(
                        "feature row count mismatch: {} vs {}",
                        q,
                        m.nrows()
                    )))
                }
                _ => {}
            }
            total_cols += m.ncols();
        }
        let q = rows.ok_or_else(|| Error::InvalidArgument("no matrices given".into()))?;
        if total_cols == 0 {
            return Err(Error::InvalidArgument("matrices have no columns".into()));
        }

        let n = total_cols as f64;
        let mut mean = vec![0.0; q];
        for m in iter.clone() {
            for (i, row) in m.rows().into_iter().enumerate() {
                mean[i] += row.sum();
            }
        }
        for mu in &mut mean {
            *mu /= n;
        }
        let mut var = vec![0.0; q];
        for m in iter {
            for (i, row) in m.rows().into_iter().enumerate() {
                for &v in row {
                    var[i] += (v - mean[i]).powi(2);
                }
            }
        }
        let std = var
            .into_iter()
            .map(|v| (v / n).sqrt().max(STD_EPS))
            .collect();
        Ok(FeatureStats { mean, std })
    }
}

/// Pooled per-row statistics over a set of training feature matrices.
pub fn compute_feature_stats(matrices: &[FeatureMatrix]) -> Result<FeatureStats> {
    FeatureStats::from_rows(matrices.iter().map(|m| &m.values))
}

/// Bin index range retained by [`select_band`]: ceil(f_low/df) ..= floor(f_high/df).
pub fn band_bin_range(fs: f64, nfft: usize, f_low: f64, f_high: f64) -> Result<(usize, usize)> {
    if !(0.0 <= f_low && f_low < f_high && f_high <= fs / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "band [{f_low}, {f_high}] invalid for fs {fs}"
        )));
    }
    let df = fs / nfft as f64;
    // Small slack keeps exact band edges (e.g. 200 Hz at df = 1000/240) from
    // falling to the wrong side through floating-point rounding.
    let k_lo = (f_low / df - 1e-9).ceil().max(0.0) as usize;
    let k_hi = ((f_high / df + 1e-9).floor() as usize).min(nfft / 2);
    if k_lo > k_hi {
        return Err(Error::InvalidArgument(format!(
            "band [{f_low}, {f_high}] contains no bins at df {df}"
        )));
    }
    Ok((k_lo, k_hi))
}

/// Keeps the bins whose center frequency lies inside [f_low, f_high] and
/// takes complex magnitudes.
pub fn select_band(s: &SpectrogramComplex, f_low: f64, f_high: f64) -> Result<FeatureMatrix> {
    let (k_lo, k_hi) = band_bin_range(s.fs, s.nfft, f_low, f_high)?;
    let q = k_hi - k_lo + 1;
    let p = s.values.ncols();
    let mut values = Array2::zeros((q, p));
    for (i, k) in (k_lo..=k_hi).enumerate() {
        for t in 0..p {
            values[(i, t)] = s.values[(k, t)].norm();
        }
    }
    let bin_freqs = (k_lo..=k_hi).map(|k| s.bin_freq(k)).collect();
    Ok(FeatureMatrix {
        values,
        bin_freqs: Some(bin_freqs),
        fs: s.fs,
    })
}

/// Z_i = (X_i - mu_i) / sigma_i applied per row.
pub fn standardize(f: &FeatureMatrix, stats: &FeatureStats) -> Result<FeatureMatrix> {
    let mut out = f.clone();
    standardize_inplace(&mut out.values, stats)?;
    Ok(out)
}

/// In-place per-row standardization of a raw feature array.
pub fn standardize_inplace(values: &mut Array2<f64>, stats: &FeatureStats) -> Result<()> {
    if values.nrows() != stats.q() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, stats have {}",
            values.nrows(),
            stats.q()
        )));
    }
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let (mu, sd) = (stats.mean[i], stats.std[i]);
        row.mapv_inplace(|v| (v - mu) / sd);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{fsst_kaiser, DEFAULT_KAISER_BETA, DEFAULT_NFFT, DEFAULT_WINDOW_LEN};
    use crate::types::Signal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_band_has_44_rows() {
        let (lo, hi) = band_bin_range(1000.0, 240, 20.0, 200.0).unwrap();
        assert_eq!((lo, hi), (5, 48));
        assert_eq!(hi - lo + 1, 44);

        let x: Vec<f64> = (0..256).map(|n| (n as f64 * 0.37).sin()).collect();
        let sig = Signal::new(x, 1000.0, "t").unwrap();
        let s = fsst_kaiser(&sig, DEFAULT_WINDOW_LEN, DEFAULT_KAISER_BETA, DEFAULT_NFFT).unwrap();
        let f = select_band(&s, 20.0, 200.0).unwrap();
        assert_eq!(f.q(), 44);
        assert_eq!(f.p(), 256);
        let freqs = f.bin_freqs.as_ref().unwrap();
        assert!(freqs[0] >= 20.0 && *freqs.last().unwrap() <= 200.0);
    }

    #[test]
    fn stats_match_naive_pooling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Array2::from_shape_fn((3, 17), |_| rng.random_range(-2.0..2.0));
        let b = Array2::from_shape_fn((3, 9), |_| rng.random_range(-2.0..2.0));
        let stats = FeatureStats::from_rows([&a, &b]).unwrap();
        for r in 0..3 {
            let pooled: Vec<f64> = a.row(r).iter().chain(b.row(r).iter()).copied().collect();
            let n = pooled.len() as f64;
            let mean = pooled.iter().sum::<f64>() / n;
            let var = pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!((stats.mean[r] - mean).abs() < 1e-12);
            assert!((stats.std[r] - var.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn standardized_pool_has_zero_mean_unit_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mats: Vec<FeatureMatrix> = (0..3)
            .map(|i| FeatureMatrix {
                values: Array2::from_shape_fn((5, 40 + i), |_| rng.random_range(-3.0..3.0)),
                bin_freqs: None,
                fs: 1000.0,
            })
            .collect();
        let stats = compute_feature_stats(&mats).unwrap();
        let std_mats: Vec<FeatureMatrix> =
            mats.iter().map(|m| standardize(m, &stats).unwrap()).collect();
        let after = compute_feature_stats(&std_mats).unwrap();
        for r in 0..5 {
            assert!(after.mean[r].abs() <= 1e-9, "row {r} mean {}", after.mean[r]);
            assert!((after.std[r] - 1.0).abs() <= 1e-9, "row {r} std {}", after.std[r]);
        }
    }

    #[test]
    fn constant_row_std_clamped() {
        let m = Array2::from_elem((2, 10), 5.0);
        let stats = FeatureStats::from_rows([&m]).unwrap();
        assert_eq!(stats.std[0], STD_EPS);
        let fm = FeatureMatrix { values: m, bin_freqs: None, fs: 1.0 };
        let out = standardize(&fm, &stats).unwrap();
        assert!(out.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn band_edges_included_with_slack() {
        // Band edges landing exactly on bin frequencies stay included.
        let (lo, hi) = band_bin_range(1000.0, 200, 20.0, 200.0).unwrap();
        assert_eq!((lo, hi), (4, 40));
        assert!(band_bin_range(1000.0, 240, 200.0, 20.0).is_err());
    }
}
