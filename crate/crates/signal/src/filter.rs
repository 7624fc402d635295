//! Causal IIR filtering with cascaded biquads (transposed direct form II).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::recording::Recording;

/// One second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Complex response at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (1.0 + z1 * self.a[0] + z2 * self.a[1])
    }
}

/// Cascade of second-order sections applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    sections: Vec<Biquad>,
}

impl Sos {
    pub fn new(sections: Vec<Biquad>) -> Self {
        Self { sections }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn response(&self, w: f64) -> Complex64 {
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w))
    }

    /// Forward-only filtering from zero initial state.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
        }
        y
    }
}

/// Butterworth bandpass of the given prototype order (`2 * order` poles),
/// via bilinear transform with prewarped band edges. Unit gain at the
/// geometric center of the band.
pub fn butterworth_bandpass(order: usize, low: f64, high: f64, fs: f64) -> Result<Sos> {
    if order == 0 {
        return Err(Error::Parameter("filter order must be at least 1".into()));
    }
    if !(low > 0.0 && low < high && high < fs / 2.0) {
        return Err(Error::Parameter(format!(
            "band edges need 0 < low < high < fs/2, got low={low}, high={high}, fs={fs}"
        )));
    }
    let k = 2.0 * fs;
    let wl = k * (PI * low / fs).tan();
    let wh = k * (PI * high / fs).tan();
    let bw = wh - wl;
    let w0sq = wl * wh;

    let mut sections = Vec::with_capacity(order);
    for i in 0..order {
        let p = Complex64::from_polar(1.0, PI * (2 * i + order + 1) as f64 / (2 * order) as f64);
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0sq).sqrt();
        for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
            let z = (k + s) / (k - s);
            // Conjugate partners come from the mirrored prototype pole.
            if z.im > 0.0 {
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [-2.0 * z.re, z.norm_sqr()],
                });
            }
        }
    }
    if sections.len() != order {
        return Err(Error::Parameter(format!(
            "band [{low}, {high}] Hz at fs={fs} yields real poles; cannot build biquads"
        )));
    }
    let center = 2.0 * (w0sq.sqrt() / k).atan();
    let mut sos = Sos::new(sections);
    let g = sos.response(center).norm();
    for b in sos.sections[0].b.iter_mut() {
        *b /= g;
    }
    Ok(sos)
}

/// Second-order notch with quality factor `q`.
pub fn notch(freq: f64, q: f64, fs: f64) -> Result<Sos> {
    if !(freq > 0.0 && freq < fs / 2.0) {
        return Err(Error::Parameter(format!("notch frequency {freq} outside (0, {})", fs / 2.0)));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("notch quality must be positive, got {q}")));
    }
    let w0 = 2.0 * PI * freq / fs;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    let c = -2.0 * w0.cos() / a0;
    Ok(Sos::new(vec![Biquad {
        b: [1.0 / a0, c, 1.0 / a0],
        a: [c, (1.0 - alpha) / a0],
    }]))
}

fn filter_recording(rec: &Recording, sos: &Sos) -> Result<Recording> {
    let channels = rec.channels().iter().map(|c| sos.apply(c)).collect();
    rec.with_channels(channels, rec.sample_rate())
}

pub fn bandpass_filter(rec: &Recording, low: f64, high: f64, order: usize) -> Result<Recording> {
    let sos = butterworth_bandpass(order, low, high, rec.sample_rate())?;
    filter_recording(rec, &sos)
}

pub fn notch_filter(rec: &Recording, freq: f64, q: f64) -> Result<Recording> {
    let sos = notch(freq, q, rec.sample_rate())?;
    filter_recording(rec, &sos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, fs: f64, secs: f64) -> Vec<f64> {
        (0..(fs * secs) as usize)
            .map(|i| (2.0 * PI * freq * i as f64 / fs).sin())
            .collect()
    }

    /// Peak amplitude over the final `secs` seconds.
    fn tail_amplitude(y: &[f64], fs: f64, secs: f64) -> f64 {
        let n = (fs * secs) as usize;
        let tail = &y[y.len() - n..];
        (2.0 * tail.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()
    }

    #[test]
    fn bandpass_passband_gain() {
        let sos = butterworth_bandpass(4, 0.1, 50.0, 250.0).unwrap();
        let y = sos.apply(&sine(10.0, 250.0, 60.0));
        let ratio = tail_amplitude(&y, 250.0, 10.0);
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn bandpass_stopband() {
        let sos = butterworth_bandpass(4, 0.1, 50.0, 250.0).unwrap();
        let y = sos.apply(&sine(100.0, 250.0, 20.0));
        assert!(tail_amplitude(&y, 250.0, 5.0) < 0.05);
    }

    #[test]
    fn bandpass_blocks_dc() {
        let sos = butterworth_bandpass(4, 0.1, 50.0, 250.0).unwrap();
        let y = sos.apply(&vec![1.0; 250 * 150]);
        let tail = &y[y.len() - 250 * 10..];
        assert!(tail.iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn bandpass_response_is_butterworth() {
        // |H|^2 = 1 / (1 + ((w^2 - w0^2) / (w bw))^(2n)) on the prewarped axis.
        let (fs, low, high, n) = (250.0, 2.0, 30.0, 4);
        let sos = butterworth_bandpass(n, low, high, fs).unwrap();
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let (wl, wh) = (warp(low), warp(high));
        for f in [0.5, 2.0, 5.0, 15.0, 30.0, 60.0, 100.0] {
            let w = warp(f);
            let x = (w * w - wl * wh) / (w * (wh - wl));
            let expected = 1.0 / (1.0 + x.powi(2 * n as i32)).sqrt();
            let got = sos.response(2.0 * PI * f / fs).norm();
            assert!((got - expected).abs() < 1e-9, "f={f}: {got} vs {expected}");
        }
        // Half-power at both edges.
        for f in [low, high] {
            let g = sos.response(2.0 * PI * f / fs).norm();
            assert!((g - 0.5f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_band_edges() {
        assert!(butterworth_bandpass(4, 0.0, 50.0, 250.0).is_err());
        assert!(butterworth_bandpass(4, 60.0, 50.0, 250.0).is_err());
        assert!(butterworth_bandpass(4, 1.0, 125.0, 250.0).is_err());
        assert!(butterworth_bandpass(0, 1.0, 50.0, 250.0).is_err());
    }

    #[test]
    fn notch_attenuation() {
        let sos = notch(50.0, 30.0, 250.0).unwrap();
        let at50 = tail_amplitude(&sos.apply(&sine(50.0, 250.0, 20.0)), 250.0, 5.0);
        let at10 = tail_amplitude(&sos.apply(&sine(10.0, 250.0, 20.0)), 250.0, 5.0);
        assert!(at50 < 0.1, "{at50}");
        assert!(at10 > 0.89, "{at10}");
        assert!(sos.response(2.0 * PI * 50.0 / 250.0).norm() < 1e-12);
    }

    #[test]
    fn notch_zero_signal() {
        let sos = notch(50.0, 30.0, 250.0).unwrap();
        assert!(sos.apply(&[0.0; 100]).iter().all(|&v| v == 0.0));
        assert!(notch(125.0, 30.0, 250.0).is_err());
        assert!(notch(50.0, 0.0, 250.0).is_err());
    }

    #[test]
    fn recording_filters_keep_metadata() {
        let rec = Recording::new(vec![sine(10.0, 250.0, 4.0); 2], 250.0, vec![], 7).unwrap();
        let out = notch_filter(&bandpass_filter(&rec, 0.1, 50.0, 4).unwrap(), 50.0, 30.0).unwrap();
        assert_eq!(out.patient_id(), 7);
        assert_eq!(out.samples(), rec.samples());
        assert!(bandpass_filter(&rec, 0.1, 200.0, 4).is_err());
    }
}
