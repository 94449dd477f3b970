//! Short-time Fourier transform (hop 1, centered) and the Fourier
//! Synchrosqueezed Transform built on top of it.
//!
//! Convention: column `t` analyzes samples centered at `t`. With the window
//! center at local offset m = 0,
//!
//!   V_g(t, k) = sum_m x(t + m) g(m) exp(-i 2 pi k m / nfft)
//!
//! i.e. windowed samples are rotated so the center lands at FFT index 0,
//! which keeps the phase referenced to the column time. Out-of-range samples
//! are treated as zero. Only the one-sided spectrum (nfft/2 + 1 bins) is kept.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::types::Signal;

use super::window::kaiser_derivative;

/// Complex one-sided spectrogram with per-sample columns.
#[derive(Debug, Clone)]
pub struct SpectrogramComplex {
    /// K x p matrix, K = nfft/2 + 1, p = signal length.
    pub values: Array2<Complex64>,
    /// Analysis window samples.
    pub window: Vec<f64>,
    pub nfft: usize,
    pub fs: f64,
}

impl SpectrogramComplex {
    pub fn bins(&self) -> usize {
        self.values.nrows()
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.fs / self.nfft as f64
    }
}

struct Analyzer {
    fft: Arc<dyn Fft<f64>>,
    nfft: usize,
    center: usize,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Analyzer {
    fn new(nfft: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Analyzer {
            fft,
            nfft,
            center: 0,
            buf: vec![Complex64::default(); nfft],
            scratch,
        }
    }

    /// One windowed, rotated, transformed column at sample `t`.
    fn column(&mut self, x: &[f64], window: &[f64], t: usize) -> &[Complex64] {
        self.buf.fill(Complex64::default());
        for (j, &w) in window.iter().enumerate() {
            let n = t as isize + j as isize - self.center as isize;
            if n < 0 || n >= x.len() as isize {
                continue;
            }
            let idx = (j as isize - self.center as isize).rem_euclid(self.nfft as isize) as usize;
            self.buf[idx] += Complex64::new(x[n as usize] * w, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        &self.buf
    }
}

fn check_window(window: &[f64], nfft: usize) -> Result<usize> {
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty analysis window".into()));
    }
    if window.len() > nfft {
        return Err(Error::InvalidArgument(format!(
            "window length {} exceeds nfft {}",
            window.len(),
            nfft
        )));
    }
    Ok((window.len() - 1) / 2)
}

/// One-sided STFT with one column per input sample.
pub fn stft(signal: &Signal, window: &[f64], nfft: usize) -> Result<SpectrogramComplex> {
    let center = check_window(window, nfft)?;
    let bins = nfft / 2 + 1;
    let p = signal.len();
    let mut analyzer = Analyzer::new(nfft);
    analyzer.center = center;
    let mut values = Array2::default((bins, p));
    for t in 0..p {
        let col = analyzer.column(&signal.samples, window, t);
        for k in 0..bins {
            values[(k, t)] = col[k];
        }
    }
    Ok(SpectrogramComplex {
        values,
        window: window.to_vec(),
        nfft,
        fs: signal.fs,
    })
}

/// Relative magnitude threshold below which bins are left unreassigned.
pub const REASSIGN_THRESHOLD: f64 = 1e-6;

/// Fourier Synchrosqueezed Transform.
///
/// Each STFT coefficient above the per-column threshold is moved to the bin
/// nearest its instantaneous-frequency estimate
///
///   omega(t, k) = f_k - Im(V_g'(t, k) / V_g(t, k)) / (2 pi)   [Hz]
///
/// where g' is the window's time derivative in per-second units. Estimates
/// are clamped to [0, fs/2]. Sub-threshold coefficients stay in place, so
/// every column sum is preserved exactly up to rounding.
pub fn fsst(signal: &Signal, window: &[f64], nfft: usize) -> Result<SpectrogramComplex> {
    fsst_with_beta_hint(signal, window, nfft, None)
}

/// As [`fsst`], but with an explicitly supplied derivative window. Used when
/// the window is not a Kaiser window generated by this crate.
pub fn fsst_with_derivative(
    signal: &Signal,
    window: &[f64],
    dwindow: &[f64],
    nfft: usize,
) -> Result<SpectrogramComplex> {
    if window.len() != dwindow.len() {
        return Err(Error::InvalidArgument(
            "window and derivative window lengths differ".into(),
        ));
    }
    let center = check_window(window, nfft)?;
    let bins = nfft / 2 + 1;
    let p = signal.len();
    let fs = signal.fs;
    let df = fs / nfft as f64;

    let mut an_g = Analyzer::new(nfft);
    an_g.center = center;
    let mut an_d = Analyzer::new(nfft);
    an_d.center = center;

    let mut values = Array2::default((bins, p));
    let mut col_g = vec![Complex64::default(); bins];
    let mut col_d = vec![Complex64::default(); bins];
    for t in 0..p {
        col_g.copy_from_slice(&an_g.column(&signal.samples, window, t)[..bins]);
        col_d.copy_from_slice(&an_d.column(&signal.samples, dwindow, t)[..bins]);
        let max_mag = col_g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let threshold = REASSIGN_THRESHOLD * max_mag;
        for k in 0..bins {
            let v = col_g[k];
            let target = if v.norm() >= threshold && max_mag > 0.0 {
                let f_k = k as f64 * df;
                let inst = f_k - (col_d[k] / v).im / (2.0 * PI);
                let inst = inst.clamp(0.0, fs / 2.0);
                ((inst / df).round() as usize).min(bins - 1)
            } else {
                k
            };
            values[(target, t)] += v;
        }
    }
    Ok(SpectrogramComplex {
        values,
        window: window.to_vec(),
        nfft,
        fs,
    })
}

fn fsst_with_beta_hint(
    signal: &Signal,
    window: &[f64],
    nfft: usize,
    beta: Option<f64>,
) -> Result<SpectrogramComplex> {
    // Default analysis windows in this crate are Kaiser windows; recover the
    // derivative numerically from the continuous form.
    let beta = beta.unwrap_or(super::DEFAULT_KAISER_BETA);
    let dwindow = kaiser_derivative(window.len(), beta, signal.fs);
    fsst_with_derivative(signal, window, &dwindow, nfft)
}

/// FSST with a Kaiser window of the given length and shape parameter.
pub fn fsst_kaiser(
    signal: &Signal,
    window_len: usize,
    beta: f64,
    nfft: usize,
) -> Result<SpectrogramComplex> {
    let window = super::window::kaiser(window_len, beta);
    fsst_with_beta_hint(signal, &window, nfft, Some(beta))
}
