use crate::error::{Error, Result};
use crate::recording::{Recording, SegmentLabel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub length_s: f64,
    pub seizure_overlap: f64,
    pub background_overlap: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            length_s: 2.0,
            seizure_overlap: 0.5,
            background_overlap: 0.0,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_s > 0.0 && self.length_s.is_finite()) {
            return Err(Error::Parameter(format!("window length must be positive, got {}", self.length_s)));
        }
        for o in [self.seizure_overlap, self.background_overlap] {
            if !(0.0..1.0).contains(&o) {
                return Err(Error::Parameter(format!("overlap must be in [0, 1), got {o}")));
            }
        }
        Ok(())
    }

    pub fn overlap_for(&self, label: SegmentLabel) -> f64 {
        match label {
            SegmentLabel::Seizure => self.seizure_overlap,
            SegmentLabel::Background => self.background_overlap,
        }
    }
}

/// A window as a sample range into the recording it was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub len: usize,
    pub label: SegmentLabel,
    pub seizure_id: u32,
    /// Shares samples with an earlier unflagged window of the same span.
    pub overlap: bool,
}

impl Window {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    /// Per-channel slices of `rec` (or any recording with the same rate).
    pub fn samples<'a>(&self, rec: &'a Recording) -> Vec<&'a [f64]> {
        rec.channels().iter().map(|c| &c[self.start..self.end()]).collect()
    }
}

/// Cuts every annotation span into fixed-length windows. Partial tails are
/// dropped; windows never cross a span boundary.
pub fn segment_windows(rec: &Recording, spec: &WindowSpec) -> Result<Vec<Window>> {
    spec.validate()?;
    let fs = rec.sample_rate();
    let len = (spec.length_s * fs).round() as usize;
    if len == 0 {
        return Err(Error::Parameter("window shorter than one sample".into()));
    }
    let mut out = Vec::new();
    for ann in rec.annotations() {
        let first = ((ann.start_s * fs) - 1e-9).ceil().max(0.0) as usize;
        let last = (((ann.end_s * fs) + 1e-9).floor() as usize).min(rec.samples());
        let stride = ((len as f64 * (1.0 - spec.overlap_for(ann.label))).round() as usize).max(1);
        let mut clean_end = 0usize;
        let mut start = first;
        while start + len <= last {
            let overlap = start != first && start < clean_end;
            if !overlap {
                clean_end = start + len;
            }
            out.push(Window {
                start,
                len,
                label: ann.label,
                seizure_id: ann.seizure_id,
                overlap,
            });
            start += stride;
        }
    }
    Ok(out)
}
