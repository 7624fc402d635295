//! Sample-rate conversion: polyphase windowed sinc for rational ratios,
//! linear interpolation otherwise.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::recording::Recording;

/// Zero crossings of the sinc kept on each side, at the lower of the two rates.
const SINC_HALF_ZEROS: usize = 16;
/// Up/down factors above this fall back to linear interpolation.
const MAX_RATIO_TERM: u64 = 1000;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(up, down)` with `target / source = up / down`, when both rates are
/// integral in millihertz and the reduced terms are small.
pub fn rational_ratio(source_hz: f64, target_hz: f64) -> Option<(u64, u64)> {
    let to_int = |f: f64| {
        let m = (f * 1000.0).round();
        ((f * 1000.0 - m).abs() < 1e-6 && m >= 1.0).then_some(m as u64)
    };
    let (s, t) = (to_int(source_hz)?, to_int(target_hz)?);
    let g = gcd(s, t);
    let (up, down) = (t / g, s / g);
    (up <= MAX_RATIO_TERM && down <= MAX_RATIO_TERM).then_some((up, down))
}

fn lowpass_taps(up: usize, down: usize) -> Vec<f64> {
    let factor = up.max(down);
    let half = SINC_HALF_ZEROS * factor;
    let len = 2 * half + 1;
    let cutoff = 1.0 / factor as f64;
    (0..len)
        .map(|i| {
            let t = i as f64 - half as f64;
            let sinc = if t == 0.0 {
                1.0
            } else {
                (PI * cutoff * t).sin() / (PI * cutoff * t)
            };
            let phase = 2.0 * PI * i as f64 / (len - 1) as f64;
            let blackman = 0.42 - 0.5 * phase.cos() + 0.08 * (2.0 * phase).cos();
            cutoff * sinc * blackman
        })
        .collect()
}

/// Zero-delay polyphase resampling; output length `ceil(len * up / down)`.
pub fn resample_poly(x: &[f64], up: usize, down: usize) -> Vec<f64> {
    let h = lowpass_taps(up, down);
    let half = (h.len() / 2) as i64;
    let out_len = (x.len() * up).div_ceil(down);
    let (up_i, down_i) = (up as i64, down as i64);
    (0..out_len)
        .map(|k| {
            // Upsampled position of output k; sum x[n] h[half + pos - n*up].
            let pos = k as i64 * down_i;
            let n_lo = (pos - half).div_euclid(up_i).max(0);
            let n_hi = ((pos + half).div_euclid(up_i)).min(x.len() as i64 - 1);
            let mut acc = 0.0;
            for n in n_lo..=n_hi {
                let j = half + pos - n * up_i;
                if (0..h.len() as i64).contains(&j) {
                    acc += x[n as usize] * h[j as usize];
                }
            }
            acc * up as f64
        })
        .collect()
}

pub fn resample_linear(x: &[f64], source_hz: f64, target_hz: f64) -> Vec<f64> {
    let out_len = ((x.len() as f64) * target_hz / source_hz).ceil() as usize;
    let last = x.len() - 1;
    (0..out_len)
        .map(|k| {
            let t = k as f64 * source_hz / target_hz;
            let i = (t.floor() as usize).min(last);
            let frac = t - i as f64;
            if i == last {
                x[last]
            } else {
                x[i] * (1.0 - frac) + x[i + 1] * frac
            }
        })
        .collect()
}

/// Returns an unchanged copy when the rate already matches.
pub fn resample(rec: &Recording, target_hz: f64) -> Result<Recording> {
    if !(target_hz > 0.0 && target_hz.is_finite()) {
        return Err(Error::Parameter(format!("target rate must be positive, got {target_hz}")));
    }
    if rec.samples() == 0 {
        return Err(Error::Recording("cannot resample an empty recording".into()));
    }
    let fs = rec.sample_rate();
    if fs == target_hz {
        return Ok(rec.clone());
    }
    let channels = match rational_ratio(fs, target_hz) {
        Some((up, down)) => rec
            .channels()
            .iter()
            .map(|c| resample_poly(c, up as usize, down as usize))
            .collect(),
        None => rec
            .channels()
            .iter()
            .map(|c| resample_linear(c, fs, target_hz))
            .collect(),
    };
    rec.with_channels(channels, target_hz)
}
