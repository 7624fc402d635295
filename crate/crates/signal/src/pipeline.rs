use rayon::prelude::*;
use tkrr_core::{LabeledDataset, Matrix};

use crate::error::{Error, Result};
use crate::features::{channel_features, sort_channel_features, FEATURES_PER_CHANNEL};
use crate::filter::{butterworth_bandpass, notch};
use crate::recording::Recording;
use crate::resample::resample;
use crate::window::{segment_windows, WindowSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub target_hz: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub band_order: usize,
    pub notch_hz: f64,
    pub notch_q: f64,
    pub window: WindowSpec,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            target_hz: 250.0,
            band_low_hz: 0.1,
            band_high_hz: 50.0,
            band_order: 4,
            notch_hz: 50.0,
            notch_q: 30.0,
            window: WindowSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub patient_id: u32,
    pub seizure_id: u32,
    /// `+1` seizure, `-1` background.
    pub label: f64,
    pub overlap: bool,
    pub features: Vec<f64>,
}

/// Feature rows in recording order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn columns(&self) -> usize {
        self.rows.first().map_or(0, |r| r.features.len())
    }

    pub fn extend(&mut self, other: FeatureTable) -> Result<()> {
        if !self.is_empty() && !other.is_empty() && other.columns() != self.columns() {
            return Err(Error::Parameter(format!(
                "cannot append {}-column rows to a {}-column table",
                other.columns(),
                self.columns()
            )));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    /// Patient ids become group ids.
    pub fn to_dataset(&self) -> Result<LabeledDataset> {
        if self.is_empty() {
            return Err(Error::Parameter("feature table is empty".into()));
        }
        let d = self.columns();
        let features = Matrix::from_fn(self.len(), d, |i, j| self.rows[i].features[j]);
        Ok(LabeledDataset::new(
            features,
            self.rows.iter().map(|r| r.label).collect(),
            self.rows.iter().map(|r| r.patient_id).collect(),
            self.rows.iter().map(|r| r.seizure_id).collect(),
            self.rows.iter().map(|r| r.overlap).collect(),
        )?)
    }
}

/// Resample, filter, window, and compute sorted per-channel features.
///
/// The HF band is measured on the resampled, notch-filtered signal; every
/// other feature on the resampled, bandpassed and notch-filtered signal.
/// Output order follows window order and does not depend on thread count.
pub fn extract_features(rec: &Recording, cfg: &ExtractConfig) -> Result<FeatureTable> {
    let base = resample(rec, cfg.target_hz)?;
    let fs = base.sample_rate();
    let band = butterworth_bandpass(cfg.band_order, cfg.band_low_hz, cfg.band_high_hz, fs)?;
    let line = notch(cfg.notch_hz, cfg.notch_q, fs)?;
    let hf: Vec<Vec<f64>> = base.channels().iter().map(|c| line.apply(c)).collect();
    let main: Vec<Vec<f64>> = base
        .channels()
        .iter()
        .map(|c| line.apply(&band.apply(c)))
        .collect();
    let windows = segment_windows(&base, &cfg.window)?;
    let rows = windows
        .par_iter()
        .map(|w| {
            let per_channel = main
                .iter()
                .zip(&hf)
                .map(|(m, h)| channel_features(&m[w.start..w.end()], &h[w.start..w.end()], fs))
                .collect::<Result<Vec<[f64; FEATURES_PER_CHANNEL]>>>()?;
            Ok(FeatureRow {
                patient_id: rec.patient_id(),
                seizure_id: w.seizure_id,
                label: w.label.sign(),
                overlap: w.overlap,
                features: sort_channel_features(&per_channel),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureTable { rows })
}
