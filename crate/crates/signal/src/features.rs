//! Per-channel window features: 7 time-domain, 7 spectral, 2 entropy.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

pub const FEATURES_PER_CHANNEL: usize = 16;

pub const FEATURE_NAMES: [&str; FEATURES_PER_CHANNEL] = [
    "zero_crossings",
    "local_maxima",
    "local_minima",
    "skewness",
    "kurtosis",
    "rms",
    "line_length",
    "total_power",
    "peak_frequency",
    "delta_power",
    "theta_power",
    "alpha_power",
    "beta_power",
    "hf_power",
    "spectral_entropy",
    "sample_entropy",
];

/// Inclusive band edges in Hz.
pub const DELTA: (f64, f64) = (1.0, 3.0);
pub const THETA: (f64, f64) = (4.0, 8.0);
pub const ALPHA: (f64, f64) = (9.0, 13.0);
pub const BETA: (f64, f64) = (14.0, 20.0);
pub const HF: (f64, f64) = (40.0, 80.0);

/// Lowest frequency counted in total power and peak search.
const SPECTRUM_FLOOR_HZ: f64 = 0.5;
/// Lowest rate at which the HF band is below Nyquist.
pub const MIN_SAMPLE_RATE: f64 = 200.0;
const SAMPEN_M: usize = 2;
const SAMPEN_R: f64 = 0.2;
pub const MIN_SAMPEN_LEN: usize = 100;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided power spectral density on bins `k * fs / L`, `k = 0..=L/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
}

impl Periodogram {
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Mean PSD over bins inside `[lo, hi]`; 0 when no bin falls inside.
    pub fn band_mean(&self, (lo, hi): (f64, f64)) -> f64 {
        let (sum, count) = self
            .freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .fold((0.0, 0usize), |(s, c), (_, p)| (s + p, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Rectangle-rule integral over bins at or above `lo`.
    pub fn power_above(&self, lo: f64) -> f64 {
        let df = self.resolution();
        self.freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo)
            .map(|(_, p)| p * df)
            .sum()
    }

    /// Frequency of the largest bin at or above `lo`; 0 for a flat-zero spectrum.
    pub fn peak_above(&self, lo: f64) -> f64 {
        let mut best = (0.0, 0.0);
        for (f, p) in self.freqs.iter().zip(&self.psd) {
            if *f >= lo && *p > best.1 {
                best = (*f, *p);
            }
        }
        best.0
    }
}

/// Hann-windowed, mean-removed periodogram.
pub fn periodogram(x: &[f64], fs: f64) -> Periodogram {
    let n = x.len();
    if n == 0 {
        return Periodogram {
            freqs: vec![],
            psd: vec![],
        };
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let window: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()
            }
        })
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .zip(&window)
        .map(|(v, w)| Complex::new((v - mean) * w, 0.0))
        .collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let bins = n / 2 + 1;
    let scale = 1.0 / (fs * wss);
    let psd = (0..bins)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            // Fold negative frequencies, except DC and an even-length Nyquist bin.
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let freqs = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    Periodogram { freqs, psd }
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Zero crossings, local maxima, local minima, skewness, excess kurtosis,
/// RMS, line length.
pub fn time_domain_features(x: &[f64]) -> Result<[f64; 7]> {
    let n = x.len();
    if n < 3 {
        return Err(Error::Parameter(format!("time-domain features need at least 3 samples, got {n}")));
    }
    let mut crossings = 0usize;
    let mut last_sign = 0.0;
    for &v in x {
        if v != 0.0 {
            let s = v.signum();
            if last_sign != 0.0 && s != last_sign {
                crossings += 1;
            }
            last_sign = s;
        }
    }
    let (mut maxima, mut minima) = (0usize, 0usize);
    for w in x.windows(3) {
        if w[1] > w[0] && w[1] > w[2] {
            maxima += 1;
        } else if w[1] < w[0] && w[1] < w[2] {
            minima += 1;
        }
    }
    let nf = n as f64;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
    let line_length: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();

    let (skew, kurt) = if is_constant(x) {
        (0.0, 0.0)
    } else {
        let mean = x.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in x {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        let g1 = m3 / m2.powf(1.5);
        let g2 = m4 / (m2 * m2) - 3.0;
        let skew = g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0);
        // The unbiased excess kurtosis needs four samples.
        let kurt = if n < 4 {
            0.0
        } else {
            (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0)
        };
        (skew, kurt)
    };
    Ok([
        crossings as f64,
        maxima as f64,
        minima as f64,
        skew,
        kurt,
        rms,
        line_length,
    ])
}

fn check_rate(fs: f64) -> Result<()> {
    if fs < MIN_SAMPLE_RATE {
        return Err(Error::SampleRate {
            fs,
            reason: format!("the {}-{} Hz band needs at least {MIN_SAMPLE_RATE} Hz", HF.0, HF.1),
        });
    }
    Ok(())
}

fn spectral_from(p: &Periodogram, hf: &Periodogram) -> [f64; 7] {
    [
        p.power_above(SPECTRUM_FLOOR_HZ),
        p.peak_above(SPECTRUM_FLOOR_HZ),
        p.band_mean(DELTA),
        p.band_mean(THETA),
        p.band_mean(ALPHA),
        p.band_mean(BETA),
        hf.band_mean(HF),
    ]
}

/// Total power, peak frequency, then mean PSD in the delta, theta, alpha,
/// beta bands of `x` and the HF band of `hf`.
pub fn frequency_domain_features(x: &[f64], fs: f64, hf: &[f64]) -> Result<[f64; 7]> {
    check_rate(fs)?;
    Ok(spectral_from(&periodogram(x, fs), &periodogram(hf, fs)))
}

/// Normalized Shannon entropy of the PSD over the non-DC bins, in `[0, 1]`.
pub fn spectral_entropy(p: &Periodogram) -> f64 {
    let bins = &p.psd[1.min(p.psd.len())..];
    let total: f64 = bins.iter().sum();
    if bins.len() < 2 || total <= 0.0 {
        return 0.0;
    }
    let h: f64 = bins
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let q = v / total;
            -q * q.ln()
        })
        .sum();
    h / (bins.len() as f64).ln()
}

/// Sample entropy with template length `m` and tolerance `r_factor * std`
/// (population standard deviation, Chebyshev distance, matches at `<= r`).
/// With no matches at one of the lengths the value is capped at
/// `ln((N - m)(N - m - 1))`.
pub fn sample_entropy(x: &[f64], m: usize, r_factor: f64) -> f64 {
    let n = x.len();
    if n <= m + 1 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf).sqrt();
    let r = r_factor * std;
    let templates = n - m;
    let (mut b, mut a) = (0u64, 0u64);
    for i in 0..templates {
        for j in (i + 1)..templates {
            if (0..m).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                b += 1;
                if i + m < n && j + m < n && (x[i + m] - x[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return ((templates as f64) * (templates as f64 - 1.0)).ln();
    }
    -(a as f64 / b as f64).ln()
}

/// Spectral entropy and sample entropy (m = 2, r = 0.2 std).
pub fn entropy_features(x: &[f64]) -> Result<[f64; 2]> {
    if x.len() < MIN_SAMPEN_LEN {
        return Err(Error::Parameter(format!(
            "entropy features need at least {MIN_SAMPEN_LEN} samples, got {}",
            x.len()
        )));
    }
    Ok([
        spectral_entropy(&periodogram(x, 1.0)),
        sample_entropy(x, SAMPEN_M, SAMPEN_R),
    ])
}

/// All 16 features of one channel; `hf` is the same window taken before
/// the bandpass.
pub fn channel_features(x: &[f64], hf: &[f64], fs: f64) -> Result<[f64; FEATURES_PER_CHANNEL]> {
    check_rate(fs)?;
    if x.len() < MIN_SAMPEN_LEN {
        return Err(Error::Parameter(format!(
            "windows need at least {MIN_SAMPEN_LEN} samples, got {}",
            x.len()
        )));
    }
    let p = periodogram(x, fs);
    let time = time_domain_features(x)?;
    let freq = spectral_from(&p, &periodogram(hf, fs));
    let mut out = [0.0; FEATURES_PER_CHANNEL];
    out[..7].copy_from_slice(&time);
    out[7..14].copy_from_slice(&freq);
    out[14] = spectral_entropy(&p);
    out[15] = sample_entropy(x, SAMPEN_M, SAMPEN_R);
    Ok(out)
}

/// Sorts each feature type across channels (descending) and concatenates
/// type-major: `out[t * C + rank]`.
pub fn sort_channel_features(per_channel: &[[f64; FEATURES_PER_CHANNEL]]) -> Vec<f64> {
    let c = per_channel.len();
    let mut out = Vec::with_capacity(c * FEATURES_PER_CHANNEL);
    for t in 0..FEATURES_PER_CHANNEL {
        let mut vals: Vec<f64> = per_channel.iter().map(|ch| ch[t]).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        out.extend(vals);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sine(freq: f64, fs: f64, n: usize, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn normal(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn alternating_sequence_counts() {
        let f = time_domain_features(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(f[0], 3.0);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], 1.0);
        assert_eq!(f[5], 1.0);
        assert_eq!(f[6], 6.0);
    }

    #[test]
    fn zeros_are_skipped_for_crossings() {
        let f = time_domain_features(&[1.0, 0.0, 0.0, -2.0, 0.0, -1.0, 3.0]).unwrap();
        assert_eq!(f[0], 2.0);
    }

    #[test]
    fn constant_window_conventions() {
        let f = time_domain_features(&[2.0; 50]).unwrap();
        assert_eq!(f, [0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        assert_eq!(entropy_features(&[2.0; 200]).unwrap(), [0.0, 0.0]);
        assert!(time_domain_features(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn moments_match_textbook_formulas() {
        // Oracle: adjusted Fisher-Pearson coefficients via explicit sums.
        let x = [0.3, -1.2, 2.5, 0.7, 0.1, -0.4, 3.3, -2.0];
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let s2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let s = s2.sqrt();
        let skew = n / ((n - 1.0) * (n - 2.0)) * x.iter().map(|v| ((v - mean) / s).powi(3)).sum::<f64>();
        let kurt = n * (n + 1.0) / ((n - 1.0) * (n - 2.0) * (n - 3.0))
            * x.iter().map(|v| ((v - mean) / s).powi(4)).sum::<f64>()
            - 3.0 * (n - 1.0).powi(2) / ((n - 2.0) * (n - 3.0));
        let f = time_domain_features(&x).unwrap();
        assert!((f[3] - skew).abs() < 1e-12);
        assert!((f[4] - kurt).abs() < 1e-12);
    }

    #[test]
    fn normal_noise_moments() {
        let f = time_domain_features(&normal(17, 5000)).unwrap();
        assert!(f[3].abs() < 0.15, "skew {}", f[3]);
        assert!(f[4].abs() < 0.3, "kurtosis {}", f[4]);
    }

    #[test]
    fn periodogram_parseval() {
        // Hann periodogram integrates to the windowed mean power.
        let x = normal(3, 512);
        let p = periodogram(&x, 250.0);
        let mean = x.iter().sum::<f64>() / 512.0;
        let w: Vec<f64> = (0..512).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / 512.0).cos()).collect();
        let wss: f64 = w.iter().map(|v| v * v).sum();
        let expected: f64 = x.iter().zip(&w).map(|(v, w)| ((v - mean) * w).powi(2)).sum::<f64>() / wss;
        let got: f64 = p.psd.iter().sum::<f64>() * p.resolution();
        assert!((got - expected).abs() < 1e-10 * expected);
        assert_eq!(p.freqs.len(), 257);
    }

    #[test]
    fn ten_hz_sine_spectrum() {
        let x = sine(10.0, 250.0, 500, 1.0);
        let f = frequency_domain_features(&x, 250.0, &x).unwrap();
        assert!((f[1] - 10.0).abs() <= 0.5);
        let (delta, theta, alpha, beta) = (f[2], f[3], f[4], f[5]);
        assert!(alpha > delta && alpha > theta && alpha > beta);
        // A unit sine carries power 1/2.
        assert!((f[0] - 0.5).abs() < 0.01);
    }

    #[test]
    fn doubling_amplitude_quadruples_power() {
        let x = normal(5, 500);
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = frequency_domain_features(&x, 250.0, &x).unwrap();
        let b = frequency_domain_features(&x2, 250.0, &x2).unwrap();
        assert!((b[0] / a[0] - 4.0).abs() < 0.04);
        assert!((b[6] / a[6] - 4.0).abs() < 0.04);
    }

    #[test]
    fn zero_signal_spectrum() {
        let z = vec![0.0; 500];
        assert_eq!(frequency_domain_features(&z, 250.0, &z).unwrap(), [0.0; 7]);
    }

    #[test]
    fn low_rate_rejected() {
        let x = vec![0.0; 500];
        assert!(matches!(
            frequency_domain_features(&x, 128.0, &x),
            Err(Error::SampleRate { .. })
        ));
    }

    #[test]
    fn hf_band_comes_from_second_input() {
        let x = sine(10.0, 250.0, 500, 1.0);
        let hf = sine(60.0, 250.0, 500, 1.0);
        let a = frequency_domain_features(&x, 250.0, &x).unwrap();
        let b = frequency_domain_features(&x, 250.0, &hf).unwrap();
        assert_eq!(a[..6], b[..6]);
        assert!(b[6] > 1e3 * a[6]);
    }

    #[test]
    fn spectral_entropy_extremes() {
        let noise = entropy_features(&normal(9, 2000)).unwrap();
        assert!(noise[0] > 0.9, "{}", noise[0]);
        let tone = entropy_features(&sine(10.0, 250.0, 500, 1.0)).unwrap();
        assert!(tone[0] < 0.35, "{}", tone[0]);
        assert!(entropy_features(&[1.0; 99]).is_err());
    }

    /// Direct transcription of the definition with explicit template vectors.
    fn sampen_oracle(x: &[f64], m: usize, r: f64) -> Option<f64> {
        let n = x.len();
        let count = |len: usize| {
            let t: Vec<&[f64]> = (0..n - m).map(|i| &x[i..i + len]).collect();
            let mut c = 0;
            for i in 0..t.len() {
                for j in 0..t.len() {
                    if i != j && t[i].iter().zip(t[j]).all(|(a, b)| (a - b).abs() <= r) {
                        c += 1;
                    }
                }
            }
            c as f64
        };
        let (b, a) = (count(m), count(m + 1));
        (a > 0.0).then(|| -(a / b).ln())
    }

    #[test]
    fn sample_entropy_matches_oracle() {
        for seed in 0..5 {
            let x = normal(seed, 150);
            let mean = x.iter().sum::<f64>() / 150.0;
            let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 150.0).sqrt();
            let want = sampen_oracle(&x, 2, 0.2 * std).unwrap();
            assert!((sample_entropy(&x, 2, 0.2) - want).abs() < 1e-12);
        }
        // Regular signals are more predictable than noise.
        let tone = sample_entropy(&sine(7.0, 250.0, 500, 1.0), 2, 0.2);
        let noise = sample_entropy(&normal(1, 500), 2, 0.2);
        assert!(tone < noise);
    }

    #[test]
    fn sample_entropy_no_matches_cap() {
        let x: Vec<f64> = (0..120).map(|i| (i * i) as f64).collect();
        assert_eq!(sample_entropy(&x, 2, 0.0001), (118.0f64 * 117.0).ln());
    }

    #[test]
    fn channel_features_layout() {
        let x = normal(2, 500);
        let hf = normal(4, 500);
        let f = channel_features(&x, &hf, 250.0).unwrap();
        assert_eq!(f[..7], time_domain_features(&x).unwrap());
        assert_eq!(f[7..14], frequency_domain_features(&x, 250.0, &hf).unwrap());
        let e = entropy_features(&x).unwrap();
        assert!((f[14] - e[0]).abs() < 1e-12);
        assert_eq!(f[15], e[1]);
    }

    #[test]
    fn sorting_single_and_swapped() {
        let a: [f64; 16] = std::array::from_fn(|i| i as f64);
        let b: [f64; 16] = std::array::from_fn(|i| 20.0 - i as f64);
        assert_eq!(sort_channel_features(&[a]), a.to_vec());
        assert_eq!(sort_channel_features(&[a, b]), sort_channel_features(&[b, a]));
        assert_eq!(sort_channel_features(&[a, b]).len(), 32);
    }

    proptest! {
        #[test]
        fn sorting_matches_naive(c in 1usize..5, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chans: Vec<[f64; 16]> = (0..c).map(|_| std::array::from_fn(|_| rng.random_range(-5.0..5.0))).collect();
            let got = sort_channel_features(&chans);
            for t in 0..16 {
                let mut col: Vec<f64> = chans.iter().map(|ch| ch[t]).collect();
                col.sort_by(|a, b| b.partial_cmp(a).unwrap());
                prop_assert_eq!(&got[t * c..(t + 1) * c], &col[..]);
            }
        }
    }
}
