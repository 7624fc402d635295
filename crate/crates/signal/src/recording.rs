use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentLabel {
    Seizure,
    Background,
}

impl SegmentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentLabel::Seizure => "seizure",
            SegmentLabel::Background => "background",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "seizure" | "seiz" | "sz" => Some(SegmentLabel::Seizure),
            "background" | "bckg" | "bg" => Some(SegmentLabel::Background),
            _ => None,
        }
    }

    /// `+1` for seizure, `-1` for background.
    pub fn sign(self) -> f64 {
        match self {
            SegmentLabel::Seizure => 1.0,
            SegmentLabel::Background => -1.0,
        }
    }
}

/// A labelled time span in seconds. `seizure_id` is 0 for background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub start_s: f64,
    pub end_s: f64,
    pub label: SegmentLabel,
    pub seizure_id: u32,
}

/// Multichannel signal with span annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    channels: Vec<Vec<f64>>,
    sample_rate: f64,
    annotations: Vec<Annotation>,
    patient_id: u32,
}

impl Recording {
    /// Validates and sorts annotations by start time.
    pub fn new(
        channels: Vec<Vec<f64>>,
        sample_rate: f64,
        mut annotations: Vec<Annotation>,
        patient_id: u32,
    ) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Recording(format!("sample rate must be positive, got {sample_rate}")));
        }
        let len = channels
            .first()
            .ok_or_else(|| Error::Recording("no channels".into()))?
            .len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::Recording("channels differ in length".into()));
        }
        let duration = len as f64 / sample_rate;
        annotations.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for a in &annotations {
            if !(a.start_s >= 0.0 && a.end_s > a.start_s && a.end_s <= duration + 1e-9) {
                return Err(Error::Recording(format!(
                    "annotation [{}, {}] outside [0, {duration}]",
                    a.start_s, a.end_s
                )));
            }
        }
        for w in annotations.windows(2) {
            if w[1].start_s < w[0].end_s - 1e-9 {
                return Err(Error::Recording(format!(
                    "annotations [{}, {}] and [{}, {}] overlap",
                    w[0].start_s, w[0].end_s, w[1].start_s, w[1].end_s
                )));
            }
        }
        Ok(Self {
            channels,
            sample_rate,
            annotations,
            patient_id,
        })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.samples() as f64 / self.sample_rate
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn patient_id(&self) -> u32 {
        self.patient_id
    }

    /// Same annotations and patient with new sample data.
    pub fn with_channels(&self, channels: Vec<Vec<f64>>, sample_rate: f64) -> Result<Self> {
        Self::new(channels, sample_rate, self.annotations.clone(), self.patient_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(start_s: f64, end_s: f64) -> Annotation {
        Annotation {
            start_s,
            end_s,
            label: SegmentLabel::Background,
            seizure_id: 0,
        }
    }

    #[test]
    fn validation() {
        let ch = vec![vec![0.0; 1000]];
        assert!(Recording::new(ch.clone(), 100.0, vec![ann(0.0, 10.0)], 1).is_ok());
        assert!(Recording::new(ch.clone(), 0.0, vec![], 1).is_err());
        assert!(Recording::new(ch.clone(), 100.0, vec![ann(5.0, 11.0)], 1).is_err());
        assert!(Recording::new(ch.clone(), 100.0, vec![ann(0.0, 5.0), ann(4.0, 6.0)], 1).is_err());
        assert!(Recording::new(vec![vec![0.0; 3], vec![0.0; 4]], 100.0, vec![], 1).is_err());
        assert!(Recording::new(vec![], 100.0, vec![], 1).is_err());
    }

    #[test]
    fn annotations_sorted() {
        let r = Recording::new(vec![vec![0.0; 1000]], 100.0, vec![ann(5.0, 10.0), ann(0.0, 5.0)], 1)
            .unwrap();
        assert_eq!(r.annotations()[0].start_s, 0.0);
    }

    #[test]
    fn label_parsing() {
        assert_eq!(SegmentLabel::parse("Seizure"), Some(SegmentLabel::Seizure));
        assert_eq!(SegmentLabel::parse("bckg"), Some(SegmentLabel::Background));
        assert_eq!(SegmentLabel::parse("artifact"), None);
    }
}
