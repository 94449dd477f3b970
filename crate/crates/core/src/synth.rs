//! Deterministic synthetic PCG generator: known-truth signals, labels and
//! pseudo-ECG annotations for desk-scale training and test oracles.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{write_annotations, write_labels, write_wav};
use crate::types::{Beat, EcgAnnotations, LabelSequence, Signal, State};

/// Half-max half-width of a Gaussian window, in units of sigma.
const HALF_MAX_SIGMAS: f64 = 1.177_410_022_515_474_7; // sqrt(2 ln 2)

/// Synthetic-cycle geometry. Bursts are Gaussian-windowed tones; the label
/// run of each sound is the half-maximum support of its window, which is
/// exactly what envelope-based labeling recovers.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub fs: f64,
    /// Mean cardiac cycle length, ms.
    pub cycle_ms: f64,
    /// Uniform jitter applied to each cycle, +- ms.
    pub cycle_jitter_ms: f64,
    pub s1_freq_hz: f64,
    /// Nominal S1 burst width (6 sigma of the Gaussian window), ms.
    pub s1_ms: f64,
    pub s2_freq_hz: f64,
    pub s2_ms: f64,
    /// Interval from S1 burst center to S2 burst center, ms.
    pub systole_ms: f64,
    /// White-noise standard deviation relative to burst amplitude 1.
    pub noise_std: f64,
    pub n_cycles: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            fs: 1000.0,
            cycle_ms: 800.0,
            cycle_jitter_ms: 50.0,
            s1_freq_hz: 50.0,
            s1_ms: 100.0,
            s2_freq_hz: 80.0,
            s2_ms: 80.0,
            systole_ms: 300.0,
            noise_std: 0.0,
            n_cycles: 10,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_cycles < 2 {
            return Err(Error::InvalidArgument("n_cycles must be >= 2".into()));
        }
        if self.noise_std < 0.0 {
            return Err(Error::InvalidArgument("noise_std must be >= 0".into()));
        }
        if self.fs <= 0.0 {
            return Err(Error::InvalidArgument("fs must be > 0".into()));
        }
        let span = self.systole_ms + (self.s1_ms + self.s2_ms) / 2.0;
        if span >= self.cycle_ms - self.cycle_jitter_ms {
            return Err(Error::InvalidArgument(
                "sounds do not fit within the shortest cycle".into(),
            ));
        }
        Ok(())
    }
}

fn gaussian_burst(samples: &mut [f64], fs: f64, center: f64, width_ms: f64, freq: f64) {
    let sigma = width_ms / 6.0 * fs / 1000.0;
    let c = center;
    let lo = ((c - 4.0 * sigma).floor().max(0.0)) as usize;
    let hi = ((c + 4.0 * sigma).ceil() as usize).min(samples.len().saturating_sub(1));
    for (t, s) in samples.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let d = t as f64 - c;
        let window = (-d * d / (2.0 * sigma * sigma)).exp();
        *s += window * (2.0 * std::f64::consts::PI * freq * d / fs).sin();
    }
}

/// Label-run half-width of a burst in samples (half-max support of the
/// Gaussian window).
fn run_half_width(width_ms: f64, fs: f64) -> usize {
    let sigma = width_ms / 6.0 * fs / 1000.0;
    (HALF_MAX_SIGMAS * sigma).round() as usize
}

/// Generates one synthetic recording with exact ground truth.
pub fn generate(cfg: &SynthConfig) -> Result<(Signal, LabelSequence, EcgAnnotations)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ms_to_samples = cfg.fs / 1000.0;

    // Cycle start times in samples.
    let mut starts = Vec::with_capacity(cfg.n_cycles + 1);
    let mut t = 0.0;
    for _ in 0..cfg.n_cycles {
        starts.push(t);
        let jitter = if cfg.cycle_jitter_ms > 0.0 {
            rng.random_range(-cfg.cycle_jitter_ms..=cfg.cycle_jitter_ms)
        } else {
            0.0
        };
        t += (cfg.cycle_ms + jitter) * ms_to_samples;
    }
    let total = t.round() as usize;

    let mut samples = vec![0.0; total];
    let mut states = vec![State::Diastole; total];
    let mut beats = Vec::with_capacity(cfg.n_cycles);
    let hw1 = run_half_width(cfg.s1_ms, cfg.fs);
    let hw2 = run_half_width(cfg.s2_ms, cfg.fs);
    for &start in &starts {
        let c1 = start + cfg.s1_ms / 2.0 * ms_to_samples;
        let c2 = c1 + cfg.systole_ms * ms_to_samples;
        gaussian_burst(&mut samples, cfg.fs, c1, cfg.s1_ms, cfg.s1_freq_hz);
        gaussian_burst(&mut samples, cfg.fs, c2, cfg.s2_ms, cfg.s2_freq_hz);

        let c1i = c1.round() as usize;
        let c2i = c2.round() as usize;
        if c2i + hw2 >= total {
            break; // last cycle truncated before its S2; leave it diastole
        }
        let s1 = (c1i.saturating_sub(hw1), c1i + hw1);
        let s2 = (c2i - hw2, c2i + hw2);
        states[s1.0..=s1.1].fill(State::S1);
        states[s1.1 + 1..s2.0].fill(State::Systole);
        states[s2.0..=s2.1].fill(State::S2);
        beats.push(Beat {
            r_peak: c1i,
            t_end: c2i,
        });
    }

    if cfg.noise_std > 0.0 {
        for s in &mut samples {
            // Box-Muller from the seeded stream keeps the generator
            // dependency-light and deterministic.
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            *s += cfg.noise_std * z;
        }
    }

    let signal = Signal::new(samples, cfg.fs, format!("synth-{}", cfg.seed))?;
    let labels = LabelSequence::new(states, cfg.fs);
    let ann = EcgAnnotations::new(beats)?;
    Ok((signal, labels, ann))
}

/// Writes `n_recordings` synthetic recordings with durations drawn from
/// `duration_s` under `out/recordings`, `out/annotations` and `out/labels`.
pub fn generate_dataset(
    base: &SynthConfig,
    n_recordings: usize,
    duration_s: (f64, f64),
    out: &Path,
) -> Result<Vec<String>> {
    if n_recordings == 0 {
        return Err(Error::InvalidArgument("need at least one recording".into()));
    }
    let (lo, hi) = duration_s;
    if !(0.0 < lo && lo <= hi) {
        return Err(Error::InvalidArgument(format!(
            "invalid duration range [{lo}, {hi}]"
        )));
    }
    let rec_dir = out.join("recordings");
    let ann_dir = out.join("annotations");
    let lab_dir = out.join("labels");
    for d in [&rec_dir, &ann_dir, &lab_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d.clone(), e))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(base.seed);
    let mut ids = Vec::with_capacity(n_recordings);
    for i in 0..n_recordings {
        let target_s = if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        };
        // Overshoot the cycle count (jitter can only shorten so far), then
        // trim to the exact target length.
        let min_cycle_s = (base.cycle_ms - base.cycle_jitter_ms) / 1000.0;
        let n_cycles = ((target_s / min_cycle_s).ceil() as usize + 1).max(2);
        let cfg = SynthConfig {
            n_cycles,
            seed: base.seed.wrapping_add(1 + i as u64),
            ..base.clone()
        };
        let (mut signal, mut labels, ann) = generate(&cfg)?;
        let total = (target_s * base.fs).round() as usize;
        signal.samples.truncate(total);
        labels.states.truncate(total);
        let beats: Vec<Beat> = ann
            .beats
            .iter()
            .filter(|b| b.t_end + run_half_width(base.s2_ms, base.fs) < total)
            .copied()
            .collect();
        let ann = EcgAnnotations::new(beats)?;

        let id = format!("rec{i:03}");
        signal.id = id.clone();
        write_wav(&signal, &rec_dir.join(format!("{id}.wav")))?;
        write_annotations(&ann, &ann_dir.join(format!("{id}.csv")))?;
        write_labels(&labels, &lab_dir.join(format!("{id}.csv")))?;
        ids.push(id);
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn generator_is_deterministic() {
        let cfg = SynthConfig { noise_std: 0.05, ..SynthConfig::default() };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        let c = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.0.samples, c.0.samples);
    }

    #[test]
    fn truth_structures_are_consistent() {
        let (signal, labels, ann) = generate(&SynthConfig::default()).unwrap();
        assert_eq!(signal.len(), labels.len());
        assert!(!ann.beats.is_empty());
        // Each annotated beat's r_peak lies inside an S1 run and its t_end
        // inside an S2 run.
        for b in &ann.beats {
            assert_eq!(labels.states[b.r_peak], State::S1, "r_peak {}", b.r_peak);
            assert_eq!(labels.states[b.t_end], State::S2, "t_end {}", b.t_end);
        }
        // Runs follow the cardiac cycle order.
        for w in labels.runs().windows(2) {
            assert_eq!(w[1].2, w[0].2.next());
        }
    }

    #[test]
    fn sound_durations_within_physiological_bounds() {
        let (_, labels, _) = generate(&SynthConfig::default()).unwrap();
        for (start, end, state) in labels.runs() {
            let ms = (end - start + 1) as f64; // fs = 1000 -> samples are ms
            match state {
                State::S1 => assert!((30.0..=150.0).contains(&ms), "S1 {ms} ms"),
                State::S2 => assert!((30.0..=120.0).contains(&ms), "S2 {ms} ms"),
                _ => {}
            }
        }
    }

    #[test]
    fn dataset_respects_duration_bounds() {
        let dir = tempdir().unwrap();
        let base = SynthConfig { noise_std: 0.02, ..SynthConfig::default() };
        let ids = generate_dataset(&base, 5, (8.0, 12.0), dir.path()).unwrap();
        assert_eq!(ids.len(), 5);
        for id in &ids {
            let sig = crate::io::read_wav(&dir.path().join("recordings").join(format!("{id}.wav"))).unwrap();
            let secs = sig.len() as f64 / sig.fs;
            assert!((8.0..12.001).contains(&secs), "{id}: {secs} s");
            let labels = crate::io::read_labels(
                &dir.path().join("labels").join(format!("{id}.csv")),
                sig.fs,
            )
            .unwrap();
            assert_eq!(labels.len(), sig.len());
            let ann = crate::io::read_annotations(
                &dir.path().join("annotations").join(format!("{id}.csv")),
            )
            .unwrap();
            assert!(ann.beats.len() >= 2);
        }
    }
}
