//! Training hyperparameters and the line-based `key = value` config format.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub epochs: usize,
    pub mini_batch: usize,
    pub lr0: f64,
    /// Epochs between learning-rate drops.
    pub lr_drop_period: usize,
    pub lr_drop_factor: f64,
    pub grad_threshold: f64,
    /// Consecutive validation evaluations above the running minimum before
    /// training stops.
    pub validation_patience: usize,
    pub dropout_p: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 6,
            mini_batch: 50,
            lr0: 0.01,
            lr_drop_period: 3,
            lr_drop_factor: 0.1,
            grad_threshold: 1.0,
            validation_patience: 6,
            dropout_p: 0.2,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.mini_batch == 0 {
            return Err(Error::InvalidArgument("mini_batch must be >= 1".into()));
        }
        if self.lr0 <= 0.0 || self.lr_drop_factor <= 0.0 {
            return Err(Error::InvalidArgument(
                "learning rates must be positive".into(),
            ));
        }
        if self.lr_drop_period == 0 {
            return Err(Error::InvalidArgument("lr_drop_period must be >= 1".into()));
        }
        if self.grad_threshold <= 0.0 {
            return Err(Error::InvalidArgument(
                "grad_threshold must be positive".into(),
            ));
        }
        if self.validation_patience == 0 {
            return Err(Error::InvalidArgument(
                "validation_patience must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidArgument(
                "dropout_p must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate for an epoch: lr0 * factor^floor(epoch / period).
    pub fn lr_for_epoch(&self, epoch: usize) -> f64 {
        self.lr0 * self.lr_drop_factor.powi((epoch / self.lr_drop_period) as i32)
    }

    /// Applies one `key = value` assignment. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |k: &str, v: &str| Error::InvalidArgument(format!("bad value {v:?} for {k}"));
        match key {
            "epochs" => self.epochs = value.parse().map_err(|_| bad(key, value))?,
            "mini_batch" => self.mini_batch = value.parse().map_err(|_| bad(key, value))?,
            "lr0" => self.lr0 = value.parse().map_err(|_| bad(key, value))?,
            "lr_drop_period" => {
                self.lr_drop_period = value.parse().map_err(|_| bad(key, value))?
            }
            "lr_drop_factor" => {
                self.lr_drop_factor = value.parse().map_err(|_| bad(key, value))?
            }
            "grad_threshold" => {
                self.grad_threshold = value.parse().map_err(|_| bad(key, value))?
            }
            "validation_patience" => {
                self.validation_patience = value.parse().map_err(|_| bad(key, value))?
            }
            "dropout_p" => self.dropout_p = value.parse().map_err(|_| bad(key, value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn is_key(key: &str) -> bool {
        matches!(
            key,
            "epochs"
                | "mini_batch"
                | "lr0"
                | "lr_drop_period"
                | "lr_drop_factor"
                | "grad_threshold"
                | "validation_patience"
                | "dropout_p"
                | "seed"
        )
    }

    /// Parses a full config text containing only hyperparameter keys.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut hp = Hyperparams::default();
        for (key, value) in parse_kv_lines(text)? {
            hp.set(&key, &value)?;
        }
        hp.validate()?;
        Ok(hp)
    }
}

/// Splits `key = value` lines; `#` starts a comment, blank lines allowed.
pub fn parse_kv_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("config line {}: expected key = value", no + 1))
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_schedule() {
        let hp = Hyperparams::default();
        assert_eq!(hp.epochs, 6);
        assert_eq!(hp.mini_batch, 50);
        assert_eq!(hp.lr0, 0.01);
        assert_eq!(hp.lr_drop_period, 3);
        assert_eq!(hp.grad_threshold, 1.0);
        assert_eq!(hp.validation_patience, 6);
        hp.validate().unwrap();
    }

    #[test]
    fn lr_schedule_exact_values() {
        let hp = Hyperparams::default();
        for e in 0..3 {
            assert_eq!(hp.lr_for_epoch(e), 0.01);
        }
        for e in 3..6 {
            assert!((hp.lr_for_epoch(e) - 0.001).abs() < 1e-18);
        }
        assert!((hp.lr_for_epoch(7) - 0.0001).abs() < 1e-18);
    }

    #[test]
    fn config_text_parses() {
        let text = "# comment\nepochs = 3\nlr0=0.02 # inline\n\nseed = 7\n";
        let hp = Hyperparams::from_config_str(text).unwrap();
        assert_eq!(hp.epochs, 3);
        assert_eq!(hp.lr0, 0.02);
        assert_eq!(hp.seed, 7);
        assert!(Hyperparams::from_config_str("bogus = 1\n").is_err());
        assert!(Hyperparams::from_config_str("epochs\n").is_err());
        assert!(Hyperparams::from_config_str("dropout_p = 1.5\n").is_err());
    }
}
