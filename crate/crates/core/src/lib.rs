//! Heart-sound (PCG) segmentation toolkit.
//!
//! Labels every sample of a phonocardiogram as one of four cardiac states
//! (S1, systole, S2, diastole). Features are magnitudes of the Fourier
//! Synchrosqueezed Transform restricted to the 20-200 Hz band; the sequence
//! labeler is a two-layer bidirectional LSTM with a dense softmax head,
//! trained with exact BPTT gradients, ADAM and gradient clipping under a
//! K-fold cross-validation protocol.

pub mod config;
pub mod dsp;
pub mod error;
pub mod framing;
pub mod io;
pub mod labeling;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod synth;
pub mod training;
pub mod types;

pub use config::PipelineConfig;
pub use dsp::{FeatureMatrix, FeatureStats, SpectrogramComplex};
pub use error::{Error, Result};
pub use framing::{FramingSpec, Patch};
pub use nn::ModelParams;
pub use types::{Beat, EcgAnnotations, LabelSequence, Signal, State, ALL_STATES};
