//! Preprocessing and per-window feature extraction for multichannel EEG-like
//! signals.
//!
//! The pipeline resamples to 250 Hz, applies a 0.1-50 Hz Butterworth
//! bandpass and a 50 Hz notch, cuts the annotated spans into 2 s windows
//! (seizure windows with 50% overlap, background without), computes 16
//! features per channel and sorts each feature across channels so the
//! result does not depend on which side a seizure starts. High-frequency
//! band power is taken from the signal before the bandpass.

pub mod error;
pub mod features;
pub mod filter;
pub mod io;
pub mod pipeline;
pub mod recording;
pub mod resample;
pub mod synth;
pub mod window;

pub use error::{Error, Result};
pub use pipeline::{extract_features, ExtractConfig, FeatureRow, FeatureTable};
pub use recording::{Annotation, Recording, SegmentLabel};
pub use window::{segment_windows, Window, WindowSpec};

pub use tkrr_core::scaler::{Scaled, ScalerParams};

/// Min-max parameters from training rows.
pub fn fit_scaler(train: &tkrr_core::Matrix) -> Result<ScalerParams> {
    Ok(ScalerParams::fit(train)?)
}

/// Scales into `[-1, 1]`, clamping and counting out-of-range entries.
pub fn apply_scaler(params: &ScalerParams, features: &tkrr_core::Matrix) -> Result<Scaled> {
    Ok(params.apply(features)?)
}
