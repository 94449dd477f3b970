//! Kaiser analysis window and its time derivative.

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window of the given length and shape parameter.
pub fn kaiser(len: usize, beta: f64) -> Vec<f64> {
    (0..len).map(|n| kaiser_at(n as f64, len, beta)).collect()
}

/// Continuous extension of the Kaiser window, evaluated at real position `t`
/// on the grid 0..len-1. Outside the support the argument of the square root
/// is clamped to zero.
fn kaiser_at(t: f64, len: usize, beta: f64) -> f64 {
    if len == 1 {
        return 1.0;
    }
    let m = (len - 1) as f64;
    let u = 2.0 * t / m - 1.0;
    let arg = (1.0 - u * u).max(0.0).sqrt();
    bessel_i0(beta * arg) / bessel_i0(beta)
}

/// Time derivative of the Kaiser window in per-second units, obtained by
/// central differences on an 8x oversampled evaluation of the continuous
/// window. `fs` converts the per-sample slope to per-second.
pub fn kaiser_derivative(len: usize, beta: f64, fs: f64) -> Vec<f64> {
    let h = 1.0 / 8.0;
    (0..len)
        .map(|n| {
            let t = n as f64;
            let slope = (kaiser_at(t + h, len, beta) - kaiser_at(t - h, len, beta)) / (2.0 * h);
            slope * fs
        })
        .collect()
}
