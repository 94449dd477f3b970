//! Shared domain types: signals, annotations and per-sample state labels.

use crate::error::{Error, Result};

/// Mono PCG waveform with its sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
    /// Recording identifier (usually the file stem).
    pub id: String,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64, id: impl Into<String>) -> Result<Self> {
        if fs <= 0.0 {
            return Err(Error::InvalidArgument(format!("fs must be > 0, got {fs}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("signal has no samples".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("signal contains NaN/Inf".into()));
        }
        Ok(Signal {
            samples,
            fs,
            id: id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One annotated heart beat: R-peak and end-of-T-wave sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Beat {
    pub r_peak: usize,
    pub t_end: usize,
}

/// Ordered ECG beat annotations used to derive training labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcgAnnotations {
    pub beats: Vec<Beat>,
}

impl EcgAnnotations {
    /// Enforces the ordering invariant r_peak(j) < t_end(j) < r_peak(j+1).
    pub fn new(beats: Vec<Beat>) -> Result<Self> {
        for (j, b) in beats.iter().enumerate() {
            if b.r_peak >= b.t_end {
                return Err(Error::Invalid(format!(
                    "beat {j}: r_peak {} must precede t_end {}",
                    b.r_peak, b.t_end
                )));
            }
            if j + 1 < beats.len() && b.t_end >= beats[j + 1].r_peak {
                return Err(Error::Invalid(format!(
                    "beat {j}: t_end {} overlaps next r_peak {}",
                    b.t_end,
                    beats[j + 1].r_peak
                )));
            }
        }
        Ok(EcgAnnotations { beats })
    }
}

/// The four cardiac states, coded 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum State {
    S1 = 1,
    Systole = 2,
    S2 = 3,
    Diastole = 4,
}

pub const ALL_STATES: [State; 4] = [State::S1, State::Systole, State::S2, State::Diastole];

impl State {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(State::S1),
            2 => Ok(State::Systole),
            3 => Ok(State::S2),
            4 => Ok(State::Diastole),
            _ => Err(Error::Invalid(format!("unknown state code {code}"))),
        }
    }

    /// Zero-based class index used by the network (code − 1).
    pub fn class_index(self) -> usize {
        self as usize - 1
    }

    pub fn from_class_index(idx: usize) -> Result<Self> {
        Self::from_code(idx as u8 + 1)
    }

    pub fn token(self) -> &'static str {
        match self {
            State::S1 => "S1",
            State::Systole => "systole",
            State::S2 => "S2",
            State::Diastole => "diastole",
        }
    }

    pub fn from_token(tok: &str) -> Result<Self> {
        match tok {
            "S1" => Ok(State::S1),
            "systole" => Ok(State::Systole),
            "S2" => Ok(State::S2),
            "diastole" => Ok(State::Diastole),
            _ => Err(Error::Invalid(format!("unknown state token {tok:?}"))),
        }
    }

    /// Successor in the cyclic order S1 → systole → S2 → diastole → S1.
    pub fn next(self) -> State {
        match self {
            State::S1 => State::Systole,
            State::Systole => State::S2,
            State::S2 => State::Diastole,
            State::Diastole => State::S1,
        }
    }
}

/// Per-sample cardiac state labels paired with a sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSequence {
    pub states: Vec<State>,
    pub fs: f64,
}

impl LabelSequence {
    pub fn new(states: Vec<State>, fs: f64) -> Self {
        LabelSequence { states, fs }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Collapses the per-sample sequence into (start, end_inclusive, state) runs.
    pub fn runs(&self) -> Vec<(usize, usize, State)> {
        let mut runs = Vec::new();
        let mut start = 0usize;
        for i in 1..=self.states.len() {
            if i == self.states.len() || self.states[i] != self.states[start] {
                runs.push((start, i - 1, self.states[start]));
                start = i;
            }
        }
        runs
    }
}
