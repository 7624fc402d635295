//! Seeded two-channel synthetic EEG with rhythmic seizure bursts.
//!
//! Each patient seed fixes a [`PatientProfile`]: background spectrum slope,
//! alpha rhythm, intermittent theta bursts, line noise, muscle noise, gain,
//! the rate and mix of blink, muscle-burst and electrode-pop artifacts, and
//! the seizure rhythm's frequency, chirp, harmonic content and growth.
//! Individual seizures jitter around the patient's rhythm, so patients
//! differ systematically while each one stays broadly consistent.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::recording::{Annotation, Recording, SegmentLabel};

pub const SYNTH_SAMPLE_RATE: f64 = 250.0;
const CHANNELS: usize = 2;
/// Cosine ramp at seizure onset and offset, seconds.
const SEIZURE_TAPER_S: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeizureSpec {
    pub start_s: f64,
    pub duration_s: f64,
}

/// Per-patient generator parameters. Amplitudes are relative to the
/// unit-variance background before `gain` is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientProfile {
    pub gain: f64,
    pub channel_gain: [f64; CHANNELS],
    pub spectral_exponent: f64,
    pub alpha_freq: f64,
    pub alpha_amp: f64,
    pub theta_burst_rate: f64,
    pub theta_burst_amp: f64,
    pub line_noise_amp: f64,
    pub muscle_amp: f64,
    pub seizure_freq: f64,
    /// Ratio of final to initial seizure frequency.
    pub seizure_chirp: f64,
    pub seizure_amp_start: f64,
    pub seizure_amp_end: f64,
    pub seizure_harmonic: f64,
    /// Fraction of the seizure waveform seen on the contralateral channel.
    pub seizure_spread: f64,
    /// Expected artifact onsets per second.
    pub artifact_rate: f64,
    /// Relative frequency of blink, muscle and electrode-pop artifacts.
    pub artifact_mix: [f64; 3],
}

impl PatientProfile {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_eed0_f9a7_1e47);
        let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
        Self {
            gain: 2f64.powf(u(-1.0, 1.0)),
            channel_gain: [u(0.8, 1.2), u(0.8, 1.2)],
            spectral_exponent: u(0.8, 1.8),
            alpha_freq: u(8.5, 11.5),
            alpha_amp: u(0.2, 1.2),
            theta_burst_rate: u(0.0, 0.08),
            theta_burst_amp: u(0.3, 1.0),
            line_noise_amp: u(0.0, 0.3),
            muscle_amp: u(0.05, 0.4),
            seizure_freq: u(3.2, 5.0),
            seizure_chirp: u(0.7, 0.95),
            seizure_amp_start: u(1.8, 2.8),
            seizure_amp_end: u(3.0, 6.0),
            seizure_harmonic: u(0.2, 0.6),
            seizure_spread: u(0.1, 0.5),
            artifact_rate: u(0.02, 0.08),
            artifact_mix: [u(0.1, 1.0), u(0.1, 1.0), u(0.1, 1.0)],
        }
    }
}

/// `count` seizures of 12-30 s placed one per equal slot of the recording,
/// with at least 10 s of background on either side.
pub fn spaced_seizures(count: usize, duration_s: f64, seed: u64) -> Result<Vec<SeizureSpec>> {
    if count == 0 {
        return Ok(vec![]);
    }
    let slot = duration_s / count as f64;
    if slot < 50.0 {
        return Err(Error::Parameter(format!(
            "{count} seizures need at least {} s, got {duration_s}",
            50 * count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51_7e5);
    Ok((0..count)
        .map(|i| {
            let duration_s = rng.random_range(12.0f64..30.0).round();
            let room = slot - duration_s - 20.0;
            let start_s = (i as f64 * slot + 10.0 + rng.random_range(0.0..room)).round();
            SeizureSpec { start_s, duration_s }
        })
        .collect())
}

/// Unit-variance noise with power falling as `f^-exponent` above 0.5 Hz.
fn colored_noise(rng: &mut ChaCha8Rng, n: usize, fs: f64, exponent: f64) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let f = (bin as f64 * fs / n as f64).max(0.5);
        *c *= if k == 0 { 0.0 } else { f.powf(-exponent / 2.0) };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    for v in &mut x {
        *v = (*v - mean) / std;
    }
    x
}

fn background(rng: &mut ChaCha8Rng, p: &PatientProfile, n: usize, fs: f64) -> Vec<f64> {
    let mut x = colored_noise(rng, n, fs, p.spectral_exponent);
    let alpha_phase = rng.random_range(0.0..2.0 * PI);
    let mod_phase = rng.random_range(0.0..2.0 * PI);
    let line_phase = rng.random_range(0.0..2.0 * PI);
    for (i, v) in x.iter_mut().enumerate() {
        let t = i as f64 / fs;
        let envelope = 0.6 + 0.4 * (2.0 * PI * 0.07 * t + mod_phase).sin();
        *v += p.alpha_amp * envelope * (2.0 * PI * p.alpha_freq * t + alpha_phase).sin();
        *v += p.line_noise_amp * (2.0 * PI * 50.0 * t + line_phase).sin();
        *v += p.muscle_amp * rng.sample::<f64, _>(StandardNormal);
    }
    // Intermittent 5-7 Hz bursts, one draw per second.
    let secs = (n as f64 / fs) as usize;
    let mut s = 0;
    while s < secs {
        if rng.random_bool(p.theta_burst_rate.clamp(0.0, 1.0)) {
            let len_s = rng.random_range(2.0..6.0);
            let freq = rng.random_range(5.0..7.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            let start = s as f64 * fs;
            let len = (len_s * fs) as usize;
            for j in 0..len.min(n.saturating_sub(start as usize)) {
                let t = j as f64 / fs;
                let taper = (PI * j as f64 / len as f64).sin();
                x[start as usize + j] += p.theta_burst_amp * taper * (2.0 * PI * freq * t + phase).sin();
            }
            s += len_s.ceil() as usize;
        } else {
            s += 1;
        }
    }
    x
}

/// Non-cerebral transients: slow blink-like deflections on both channels,
/// broadband muscle bursts, and decaying electrode pops on one channel.
fn add_artifacts(rng: &mut ChaCha8Rng, p: &PatientProfile, channels: &mut [Vec<f64>], fs: f64) {
    let n = channels[0].len();
    let total: f64 = p.artifact_mix.iter().sum();
    for sec in 0..(n as f64 / fs) as usize {
        if !rng.random_bool(p.artifact_rate.clamp(0.0, 1.0)) {
            continue;
        }
        let start = ((sec as f64 + rng.random_range(0.0..1.0)) * fs) as usize;
        let pick = rng.random_range(0.0..total);
        if pick < p.artifact_mix[0] {
            let len = (rng.random_range(0.3..0.8) * fs) as usize;
            let amp = rng.random_range(3.0..8.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let weights = [1.0, rng.random_range(0.5..1.0)];
            for (ch, w) in channels.iter_mut().zip(weights) {
                for j in 0..len.min(n - start) {
                    ch[start + j] += w * amp * (PI * j as f64 / len as f64).sin();
                }
            }
        } else if pick < p.artifact_mix[0] + p.artifact_mix[1] {
            let len = (rng.random_range(1.0..4.0) * fs) as usize;
            let amp = rng.random_range(1.5..4.0);
            for ch in channels.iter_mut() {
                for j in 0..len.min(n - start) {
                    let taper = (PI * j as f64 / len as f64).sin();
                    ch[start + j] += amp * taper * rng.sample::<f64, _>(StandardNormal);
                }
            }
        } else {
            let tau = rng.random_range(0.1..0.4) * fs;
            let amp = rng.random_range(4.0..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let ch = rng.random_range(0..channels.len());
            for j in 0..((5.0 * tau) as usize).min(n - start) {
                channels[ch][start + j] += amp * (-(j as f64) / tau).exp();
            }
        }
    }
}

/// Chirping rhythmic discharge with linearly growing amplitude.
fn seizure_waveform(rng: &mut ChaCha8Rng, p: &PatientProfile, len: usize, fs: f64) -> Vec<f64> {
    // Seizures of one patient share a profile but vary noticeably.
    let f0 = (p.seizure_freq * rng.random_range(0.8..1.25)).clamp(3.0, 5.0);
    let chirp = (p.seizure_chirp * rng.random_range(0.9..1.1)).min(1.0);
    let harmonic = p.seizure_harmonic * rng.random_range(0.5..1.5);
    let amp_scale = rng.random_range(0.6..1.4);
    let phase0 = rng.random_range(0.0..2.0 * PI);
    let taper = (SEIZURE_TAPER_S * fs) as usize;
    let mut phase = phase0;
    (0..len)
        .map(|i| {
            let tau = i as f64 / len as f64;
            let freq = f0 * (1.0 + (chirp - 1.0) * tau);
            phase += 2.0 * PI * freq / fs;
            let amp = amp_scale * (p.seizure_amp_start + (p.seizure_amp_end - p.seizure_amp_start) * tau);
            let edge = i.min(len - 1 - i);
            let ramp = if edge < taper {
                0.5 - 0.5 * (PI * edge as f64 / taper as f64).cos()
            } else {
                1.0
            };
            ramp * amp * (phase.sin() + harmonic * (2.0 * phase + 0.7).sin())
        })
        .collect()
}

/// Background annotations fill the gaps between seizures. Seizure `i`
/// (1-based id) appears mainly on channel `(i - 1) % 2`.
pub fn synthesize_recording(
    seed: u64,
    duration_s: f64,
    seizures: &[SeizureSpec],
    patient_id: u32,
) -> Result<Recording> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::Parameter(format!("duration must be positive, got {duration_s}")));
    }
    let mut sorted = seizures.to_vec();
    sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    for s in &sorted {
        if !(s.start_s >= 0.0 && s.duration_s > 0.0 && s.start_s + s.duration_s <= duration_s) {
            return Err(Error::Parameter(format!(
                "seizure at {} s lasting {} s does not fit in {duration_s} s",
                s.start_s, s.duration_s
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].start_s < w[0].start_s + w[0].duration_s {
            return Err(Error::Parameter(format!("seizures at {} s and {} s overlap", w[0].start_s, w[1].start_s)));
        }
    }

    let fs = SYNTH_SAMPLE_RATE;
    let n = (duration_s * fs).round() as usize;
    let profile = PatientProfile::from_seed(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channels: Vec<Vec<f64>> = (0..CHANNELS)
        .map(|_| background(&mut rng, &profile, n, fs))
        .collect();
    add_artifacts(&mut rng, &profile, &mut channels, fs);

    let mut annotations = Vec::new();
    let mut cursor = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        let start = (s.start_s * fs).round() as usize;
        let len = ((s.start_s + s.duration_s) * fs).round() as usize - start;
        let wave = seizure_waveform(&mut rng, &profile, len, fs);
        let side = i % CHANNELS;
        for (c, ch) in channels.iter_mut().enumerate() {
            let w = if c == side { 1.0 } else { profile.seizure_spread };
            for (j, v) in wave.iter().enumerate() {
                ch[start + j] += w * v;
            }
        }
        if s.start_s > cursor {
            annotations.push(Annotation {
                start_s: cursor,
                end_s: s.start_s,
                label: SegmentLabel::Background,
                seizure_id: 0,
            });
        }
        annotations.push(Annotation {
            start_s: s.start_s,
            end_s: s.start_s + s.duration_s,
            label: SegmentLabel::Seizure,
            seizure_id: i as u32 + 1,
        });
        cursor = s.start_s + s.duration_s;
    }
    if cursor < duration_s {
        annotations.push(Annotation {
            start_s: cursor,
            end_s: duration_s,
            label: SegmentLabel::Background,
            seizure_id: 0,
        });
    }
    for (c, ch) in channels.iter_mut().enumerate() {
        let g = profile.gain * profile.channel_gain[c];
        for v in ch.iter_mut() {
            *v *= g;
        }
    }
    Recording::new(channels, fs, annotations, patient_id)
}
