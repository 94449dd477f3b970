//! End-to-end pipeline configuration, persisted with every trained model.

use crate::dsp;
use crate::error::{Error, Result};
use crate::training::hyperparams::{parse_kv_lines, Hyperparams};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Pipeline sampling rate, Hz; inputs are resampled to this on ingestion.
    pub fs: f64,
    pub nfft: usize,
    pub window_len: usize,
    pub kaiser_beta: f64,
    pub band_low: f64,
    pub band_high: f64,
    /// Patch length L, timestamps.
    pub patch_len: usize,
    /// Patch stride tau, timestamps.
    pub stride: usize,
    pub hidden: usize,
    pub hp: Hyperparams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fs: 1000.0,
            nfft: dsp::DEFAULT_NFFT,
            window_len: dsp::DEFAULT_WINDOW_LEN,
            kaiser_beta: dsp::DEFAULT_KAISER_BETA,
            band_low: dsp::DEFAULT_BAND.0,
            band_high: dsp::DEFAULT_BAND.1,
            patch_len: 2000,
            stride: 1000,
            hidden: 200,
            hp: Hyperparams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fs <= 0.0 {
            return Err(Error::InvalidArgument("fs must be > 0".into()));
        }
        if self.window_len == 0 || self.window_len > self.nfft {
            return Err(Error::InvalidArgument(
                "window_len must be in 1..=nfft".into(),
            ));
        }
        if !(0.0 <= self.band_low && self.band_low < self.band_high
            && self.band_high <= self.fs / 2.0)
        {
            return Err(Error::InvalidArgument("invalid frequency band".into()));
        }
        if self.patch_len == 0 || self.stride == 0 || self.stride > self.patch_len {
            return Err(Error::InvalidArgument(
                "need 1 <= stride <= patch_len".into(),
            ));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden must be >= 1".into()));
        }
        self.hp.validate()
    }

    /// Number of feature rows the band selection yields.
    pub fn feature_rows(&self) -> Result<usize> {
        let (lo, hi) = dsp::band_bin_range(self.fs, self.nfft, self.band_low, self.band_high)?;
        Ok(hi - lo + 1)
    }

    /// Parses `key = value` config text over both pipeline and
    /// hyperparameter keys; unknown keys are rejected.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (key, value) in parse_kv_lines(text)? {
            let bad = || Error::InvalidArgument(format!("bad value {value:?} for {key}"));
            match key.as_str() {
                "fs" => cfg.fs = value.parse().map_err(|_| bad())?,
                "nfft" => cfg.nfft = value.parse().map_err(|_| bad())?,
                "window_len" => cfg.window_len = value.parse().map_err(|_| bad())?,
                "kaiser_beta" => cfg.kaiser_beta = value.parse().map_err(|_| bad())?,
                "band_low" => cfg.band_low = value.parse().map_err(|_| bad())?,
                "band_high" => cfg.band_high = value.parse().map_err(|_| bad())?,
                "patch_len" => cfg.patch_len = value.parse().map_err(|_| bad())?,
                "stride" => cfg.stride = value.parse().map_err(|_| bad())?,
                "hidden" => cfg.hidden = value.parse().map_err(|_| bad())?,
                _ if Hyperparams::is_key(&key) => cfg.hp.set(&key, &value)?,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown config key {key:?}"
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`PipelineConfig::from_config_str`]; float fields use
    /// Rust's shortest round-trip formatting, so parse(format(cfg)) == cfg.
    pub fn to_config_str(&self) -> String {
        format!(
            "fs = {}\nnfft = {}\nwindow_len = {}\nkaiser_beta = {}\nband_low = {}\n\
             band_high = {}\npatch_len = {}\nstride = {}\nhidden = {}\n\
             epochs = {}\nmini_batch = {}\nlr0 = {}\nlr_drop_period = {}\n\
             lr_drop_factor = {}\ngrad_threshold = {}\nvalidation_patience = {}\n\
             dropout_p = {}\nseed = {}\n",
            self.fs,
            self.nfft,
            self.window_len,
            self.kaiser_beta,
            self.band_low,
            self.band_high,
            self.patch_len,
            self.stride,
            self.hidden,
            self.hp.epochs,
            self.hp.mini_batch,
            self.hp.lr0,
            self.hp.lr_drop_period,
            self.hp.lr_drop_factor,
            self.hp.grad_threshold,
            self.hp.validation_patience,
            self.hp.dropout_p,
            self.hp.seed,
        )
    }

    /// Feature-extraction fields only, for checking a model against
    /// requested settings.
    pub fn feature_settings(&self) -> (u64, usize, usize, u64, u64, u64) {
        (
            self.fs.to_bits(),
            self.nfft,
            self.window_len,
            self.kaiser_beta.to_bits(),
            self.band_low.to_bits(),
            self.band_high.to_bits(),
        )
    }
}
