//! Signal processing: homomorphic envelope, STFT, FSST and feature
//! band selection / standardization.

pub mod envelope;
pub mod features;
pub mod stft;
pub mod window;

pub use envelope::{homomorphic_envelope, ENVELOPE_CUTOFF_HZ, LOG_EPS};
pub use features::{
    band_bin_range, compute_feature_stats, select_band, standardize, standardize_inplace,
    FeatureMatrix, FeatureStats, STD_EPS,
};
pub use stft::{fsst, fsst_kaiser, fsst_with_derivative, stft, SpectrogramComplex};
pub use window::{kaiser, kaiser_derivative};
pub use num_complex::Complex64;

/// Default analysis window length (samples at the pipeline rate).
pub const DEFAULT_WINDOW_LEN: usize = 127;
/// Default Kaiser shape parameter.
pub const DEFAULT_KAISER_BETA: f64 = 10.0;
/// Default FFT length; with fs = 1000 Hz this makes the 20-200 Hz band
/// exactly 44 bins wide.
pub const DEFAULT_NFFT: usize = 240;
/// Default retained band, Hz.
pub const DEFAULT_BAND: (f64, f64) = (20.0, 200.0);
