//! Homomorphic amplitude envelope: exp(LPF(ln(|x| + eps))).

use crate::types::Signal;

/// Guard added inside the logarithm so silent samples stay finite.
pub const LOG_EPS: f64 = 1e-10;

/// Low-pass cutoff of the envelope smoother, Hz.
pub const ENVELOPE_CUTOFF_HZ: f64 = 8.0;

/// First-order Butterworth low-pass (bilinear transform), run zero-phase
/// (forward then backward). State is initialized to the first sample so a
/// constant input passes through exactly.
fn butter1_filtfilt(x: &[f64], cutoff_hz: f64, fs: f64) -> Vec<f64> {
    let wc = (std::f64::consts::PI * cutoff_hz / fs).tan();
    let b = wc / (1.0 + wc);
    let a1 = (wc - 1.0) / (wc + 1.0);
    let pass = |input: &[f64]| -> Vec<f64> {
        let mut y = Vec::with_capacity(input.len());
        let mut x_prev = input[0];
        let mut y_prev = input[0];
        for &xt in input {
            let yt = b * (xt + x_prev) - a1 * y_prev;
            y.push(yt);
            x_prev = xt;
            y_prev = yt;
        }
        y
    };
    let mut fwd = pass(x);
    fwd.reverse();
    let mut back = pass(&fwd);
    back.reverse();
    back
}

/// Homomorphic envelope of a signal. Strictly positive, same length as the
/// input, invariant (up to the log guard) under sign flips of the signal.
pub fn homomorphic_envelope(signal: &Signal) -> Vec<f64> {
    let log_mag: Vec<f64> = signal
        .samples
        .iter()
        .map(|&s| (s.abs() + LOG_EPS).ln())
        .collect();
    butter1_filtfilt(&log_mag, ENVELOPE_CUTOFF_HZ, signal.fs)
        .into_iter()
        .map(f64::exp)
        .collect()
}
