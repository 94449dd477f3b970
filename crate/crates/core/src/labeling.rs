//! Four-state training labels from ECG beat annotations plus the
//! homomorphic envelope. Offline only; segmentation never needs this.

use crate::dsp::homomorphic_envelope;
use crate::error::{Error, Result};
use crate::types::{EcgAnnotations, LabelSequence, Signal, State};

/// Search windows, duration clamps and the half-maximum extent fraction.
/// All durations in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelingConfig {
    /// Search window around the R peak: (before, after).
    pub s1_search_ms: (f64, f64),
    /// Search window around the end of the T wave: (before, after).
    pub s2_search_ms: (f64, f64),
    pub s1_dur_bounds_ms: (f64, f64),
    pub s2_dur_bounds_ms: (f64, f64),
    pub half_max_frac: f64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            s1_search_ms: (50.0, 100.0),
            s2_search_ms: (50.0, 100.0),
            s1_dur_bounds_ms: (30.0, 150.0),
            s2_dur_bounds_ms: (30.0, 120.0),
            half_max_frac: 0.5,
        }
    }
}

struct Run {
    start: usize,
    end: usize, // inclusive
}

/// Locates one heart-sound run: envelope argmax inside the search window,
/// extended to the maximal contiguous region >= frac * peak, then clamped
/// to the duration bounds and to the window extended by the maximum
/// duration.
fn locate_sound(
    env: &[f64],
    anchor: usize,
    search_ms: (f64, f64),
    dur_bounds_ms: (f64, f64),
    frac: f64,
    fs: f64,
) -> Run {
    let ms = |v: f64| (v * fs / 1000.0).round() as usize;
    let win_lo = anchor.saturating_sub(ms(search_ms.0));
    let win_hi = (anchor + ms(search_ms.1)).min(env.len() - 1);

    let mut center = win_lo;
    for t in win_lo..=win_hi {
        if env[t] > env[center] {
            center = t;
        }
    }
    let threshold = frac * env[center];

    let mut start = center;
    while start > 0 && env[start - 1] >= threshold {
        start -= 1;
    }
    let mut end = center;
    while end + 1 < env.len() && env[end + 1] >= threshold {
        end += 1;
    }

    // Keep the run inside the search window extended by the maximum
    // duration on each side.
    let max_d = ms(dur_bounds_ms.1).max(1);
    let min_d = ms(dur_bounds_ms.0).max(1);
    start = start.max(win_lo.saturating_sub(max_d));
    end = end.min((win_hi + max_d).min(env.len() - 1));

    // Clamp the duration, trimming or growing symmetrically around the
    // center.
    let too_long = |s: usize, e: usize| e - s + 1 > max_d;
    while too_long(start, end) {
        if end - center > center - start {
            end -= 1;
        } else {
            start += 1;
        }
    }
    let too_short = |s: usize, e: usize| e - s + 1 < min_d;
    while too_short(start, end) {
        if center - start <= end - center && start > 0 {
            start -= 1;
        } else if end + 1 < env.len() {
            end += 1;
        } else if start > 0 {
            start -= 1;
        } else {
            break;
        }
    }
    Run { start, end }
}

/// Derives per-sample labels: S1 around each R peak, S2 around each end-T,
/// systole between them, diastole elsewhere.
pub fn label_states(
    signal: &Signal,
    ann: &EcgAnnotations,
    cfg: &LabelingConfig,
) -> Result<LabelSequence> {
    let usable: Vec<_> = ann
        .beats
        .iter()
        .filter(|b| b.t_end < signal.len())
        .copied()
        .collect();
    if usable.len() < 2 {
        return Err(Error::Labeling {
            id: signal.id.clone(),
            reason: format!("need at least 2 usable beats, found {}", usable.len()),
        });
    }

    let env = homomorphic_envelope(signal);
    let mut sounds: Vec<(Run, Run)> = Vec::with_capacity(usable.len());
    for beat in &usable {
        let s1 = locate_sound(
            &env,
            beat.r_peak,
            cfg.s1_search_ms,
            cfg.s1_dur_bounds_ms,
            cfg.half_max_frac,
            signal.fs,
        );
        let s2 = locate_sound(
            &env,
            beat.t_end,
            cfg.s2_search_ms,
            cfg.s2_dur_bounds_ms,
            cfg.half_max_frac,
            signal.fs,
        );
        sounds.push((s1, s2));
    }

    // Reject overlapping or out-of-order sound regions.
    for (j, (s1, s2)) in sounds.iter().enumerate() {
        if s1.end + 1 >= s2.start {
            return Err(Error::Labeling {
                id: signal.id.clone(),
                reason: format!("beat {j}: S1 region reaches into S2 region"),
            });
        }
        if j + 1 < sounds.len() && s2.end + 1 >= sounds[j + 1].0.start {
            return Err(Error::Labeling {
                id: signal.id.clone(),
                reason: format!("beat {j}: S2 region reaches into next beat's S1"),
            });
        }
    }

    // Leading samples and everything after an S2 default to diastole;
    // explicit runs overwrite the rest.
    let mut states = vec![State::Diastole; signal.len()];
    for (j, (s1, s2)) in sounds.iter().enumerate() {
        states[s1.start..=s1.end].fill(State::S1);
        states[s1.end + 1..s2.start].fill(State::Systole);
        states[s2.start..=s2.end].fill(State::S2);
        let _ = j;
    }
    Ok(LabelSequence::new(states, signal.fs))
}

/// Reports cyclic-order violations and degenerate structure. Empty result
/// means the sequence is valid.
pub fn validate_labels(labels: &LabelSequence) -> Vec<String> {
    let mut violations = Vec::new();
    if labels.is_empty() {
        violations.push("empty label sequence".to_string());
        return violations;
    }
    let runs = labels.runs();
    for w in runs.windows(2) {
        let (_, _, a) = w[0];
        let (start, _, b) = w[1];
        if b != a.next() {
            violations.push(format!(
                "run starting at {start}: {} follows {}, expected {}",
                b.token(),
                a.token(),
                a.next().token()
            ));
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};
    use crate::types::Beat;

    #[test]
    fn recovers_synthetic_truth() {
        // The synthetic truth runs are the half-max supports of the burst
        // envelopes, which is what the labeler estimates.
        for seed in [0, 1, 2] {
            let cfg = SynthConfig { n_cycles: 12, noise_std: 0.0, seed, ..SynthConfig::default() };
            let (signal, truth, ann) = generate(&cfg).unwrap();
            let derived = label_states(&signal, &ann, &LabelingConfig::default()).unwrap();
            assert_eq!(derived.len(), truth.len());
            let agree = derived
                .states
                .iter()
                .zip(&truth.states)
                .filter(|(a, b)| a == b)
                .count() as f64
                / truth.len() as f64;
            assert!(agree >= 0.95, "seed {seed}: agreement {agree}");
            assert!(validate_labels(&derived).is_empty());
        }
    }

    #[test]
    fn labeled_runs_follow_cycle_order() {
        let (signal, _, ann) = generate(&SynthConfig::default()).unwrap();
        let derived = label_states(&signal, &ann, &LabelingConfig::default()).unwrap();
        for w in derived.runs().windows(2) {
            assert_eq!(w[1].2, w[0].2.next(), "at {:?}", w);
        }
    }

    #[test]
    fn too_few_beats_rejected() {
        let (signal, _, _) = generate(&SynthConfig::default()).unwrap();
        let ann = EcgAnnotations::new(vec![Beat { r_peak: 50, t_end: 350 }]).unwrap();
        assert!(label_states(&signal, &ann, &LabelingConfig::default()).is_err());
    }

    #[test]
    fn overlapping_sounds_rejected() {
        let (signal, _, _) = generate(&SynthConfig::default()).unwrap();
        // Two "beats" so close that their S1/S2 windows collide.
        let ann = EcgAnnotations::new(vec![
            Beat { r_peak: 50, t_end: 80 },
            Beat { r_peak: 110, t_end: 410 },
        ])
        .unwrap();
        let r = label_states(&signal, &ann, &LabelingConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn validator_flags_bad_order() {
        use crate::types::State::*;
        let good = LabelSequence::new(
            [S1, Systole, S2, Diastole].repeat(5),
            1000.0,
        );
        assert!(validate_labels(&good).is_empty());
        let bad = LabelSequence::new(vec![S1, S2, Systole, Diastole], 1000.0);
        assert!(!validate_labels(&bad).is_empty());
    }
}
