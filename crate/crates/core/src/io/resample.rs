//! Band-limited sample-rate conversion by windowed-sinc interpolation.

use crate::dsp::window::bessel_i0;
use crate::error::{Error, Result};
use crate::types::Signal;

/// Number of sinc lobes kept on each side of the interpolation kernel.
const LOBES: usize = 16;
/// Kaiser shape of the kernel taper.
const KERNEL_BETA: f64 = 8.0;
/// Anti-alias cutoff as a fraction of the lower Nyquist frequency.
const CUTOFF_FRAC: f64 = 0.9;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Resamples to `target_fs`. Output length is round(len * target_fs / fs).
/// The kernel is a Kaiser-windowed sinc with cutoff at 90% of the lower of
/// the two Nyquist frequencies.
pub fn resample(signal: &Signal, target_fs: f64) -> Result<Signal> {
    if target_fs <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target_fs must be > 0, got {target_fs}"
        )));
    }
    if (target_fs - signal.fs).abs() < 1e-9 {
        return Ok(signal.clone());
    }

    let ratio = target_fs / signal.fs;
    let out_len = (signal.len() as f64 * ratio).round() as usize;
    if out_len == 0 {
        return Err(Error::InvalidArgument(
            "resampled signal would be empty".into(),
        ));
    }

    // Normalized cutoff in input cycles/sample; <= 0.45 by construction.
    let nu = CUTOFF_FRAC * 0.5 * ratio.min(1.0);
    let half_width = ((LOBES as f64) / (2.0 * nu)).ceil() as isize;
    let i0b = bessel_i0(KERNEL_BETA);
    let x = &signal.samples;
    let n_in = x.len() as isize;

    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        let t = m as f64 / ratio; // position in input samples
        let center = t.floor() as isize;
        let mut acc = 0.0;
        for k in center - half_width..=center + half_width {
            if k < 0 || k >= n_in {
                continue;
            }
            let d = k as f64 - t;
            let u = d / half_width as f64;
            if u.abs() > 1.0 {
                continue;
            }
            let taper = bessel_i0(KERNEL_BETA * (1.0 - u * u).sqrt()) / i0b;
            acc += x[k as usize] * 2.0 * nu * sinc(2.0 * nu * d) * taper;
        }
        out.push(acc);
    }
    Signal::new(out, target_fs, signal.id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fft_peak_hz(x: &[f64], fs: f64) -> f64 {
        use num_complex::Complex64;
        use rustfft::FftPlanner;
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let half = buf.len() / 2;
        let (k, _) = buf[..half]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        k as f64 * fs / x.len() as f64
    }

    #[test]
    fn identity_when_rates_match() {
        let sig = Signal::new(vec![0.1, 0.2, 0.3], 1000.0, "t").unwrap();
        let out = resample(&sig, 1000.0).unwrap();
        assert_eq!(out, sig);
    }

    #[test]
    fn output_length_rounds() {
        let sig = Signal::new(vec![0.0; 2000], 2000.0, "t").unwrap();
        assert_eq!(resample(&sig, 1000.0).unwrap().len(), 1000);
        assert_eq!(resample(&sig, 3000.0).unwrap().len(), 3000);
        let odd = Signal::new(vec![0.0; 999], 2000.0, "t").unwrap();
        assert_eq!(resample(&odd, 1000.0).unwrap().len(), 500); // round(499.5)
    }

    #[test]
    fn tone_frequency_preserved_both_directions() {
        let f = 73.0;
        for (fs_in, fs_out) in [(2000.0, 1000.0), (800.0, 1000.0), (44100.0, 1000.0)] {
            let n = (2.0 * fs_in) as usize;
            let x: Vec<f64> = (0..n)
                .map(|t| (2.0 * std::f64::consts::PI * f * t as f64 / fs_in).sin())
                .collect();
            let sig = Signal::new(x, fs_in, "tone").unwrap();
            let out = resample(&sig, fs_out).unwrap();
            let peak = fft_peak_hz(&out.samples, fs_out);
            assert!((peak - f).abs() <= 0.5, "{fs_in}->{fs_out}: peak {peak}");
        }
    }

    #[test]
    fn amplitude_roughly_preserved() {
        let f = 40.0;
        let fs_in = 2000.0;
        let x: Vec<f64> = (0..4000)
            .map(|t| (2.0 * std::f64::consts::PI * f * t as f64 / fs_in).sin())
            .collect();
        let sig = Signal::new(x, fs_in, "t").unwrap();
        let out = resample(&sig, 1000.0).unwrap();
        let rms = (out.samples.iter().map(|v| v * v).sum::<f64>() / out.len() as f64).sqrt();
        assert!((rms - (0.5f64).sqrt()).abs() < 0.02, "rms {rms}");
        assert!(resample(&sig, 0.0).is_err());
    }
}
