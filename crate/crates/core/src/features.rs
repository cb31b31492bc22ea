//! Per-frame acoustic descriptors and their clip-level median/mean summary.
//!
//! All spectral features read the Hann-windowed STFT of
//! [`AnalysisConfig`]; pitch, zero-crossing rate and RMS read the raw
//! (unwindowed) samples of the same frames.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::audio::AudioClip;
use crate::dsp::{self, bin_frequency, AnalysisConfig, FilterAxis};
use crate::error::{Error, Result};

pub const PITCH_MIN_HZ: f64 = 50.0;
pub const PITCH_MAX_HZ: f64 = 400.0;
/// Minimum `r[τ]/r[0]` for a frame to count as voiced.
pub const VOICING_THRESHOLD: f64 = 0.3;
pub const ROLLOFF_FRACTION: f64 = 0.85;
pub const N_MELS: usize = 26;
pub const N_MFCC: usize = 13;
pub const N_CONTRAST_BANDS: usize = 6;
pub const N_CHROMA: usize = 12;
/// Fraction of the peak window energy below which resynthesised samples
/// are left out of the HNR.
pub const HNR_EDGE_FLOOR: f64 = 1e-3;
pub const HPSS_KERNEL: usize = 17;

/// Lower band edges in Hz; the last band closes at Nyquist.
pub const CONTRAST_EDGES: [f64; N_CONTRAST_BANDS] = [200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0];

const EPS: f64 = 1e-10;

/// Median and mean of a scalar feature over frames.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Summary {
    pub median: f64,
    pub mean: f64,
}

/// Element-wise median and mean of a vector feature over frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorSummary {
    pub median: Vec<f64>,
    pub mean: Vec<f64>,
}

impl VectorSummary {
    pub fn zeros(len: usize) -> Self {
        Self {
            median: vec![0.0; len],
            mean: vec![0.0; len],
        }
    }
}

/// The clip-level fingerprint: eleven feature families, each as a
/// median/mean pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// Hz, over voiced frames only; zero when none are voiced.
    pub f0: Summary,
    pub centroid: Summary,
    pub bandwidth: Summary,
    pub rolloff: Summary,
    pub zcr: Summary,
    pub mfcc: VectorSummary,
    pub rms: Summary,
    /// A single clip-level ratio, stored in both slots.
    pub hnr: Summary,
    pub flatness: Summary,
    /// dB per band.
    pub contrast: VectorSummary,
    pub chroma: VectorSummary,
}

impl FeatureSet {
    /// All families zero, vectors at their declared lengths.
    pub fn zeros() -> Self {
        Self {
            f0: Summary::default(),
            centroid: Summary::default(),
            bandwidth: Summary::default(),
            rolloff: Summary::default(),
            zcr: Summary::default(),
            mfcc: VectorSummary::zeros(N_MFCC),
            rms: Summary::default(),
            hnr: Summary::default(),
            flatness: Summary::default(),
            contrast: VectorSummary::zeros(N_CONTRAST_BANDS),
            chroma: VectorSummary::zeros(N_CHROMA),
        }
    }

    /// Flat JSON object: `<family>_median` / `<family>_mean` keys mapping to
    /// numbers or arrays.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Flat<'a> {
            f0_median: f64,
            f0_mean: f64,
            centroid_median: f64,
            centroid_mean: f64,
            bandwidth_median: f64,
            bandwidth_mean: f64,
            rolloff_median: f64,
            rolloff_mean: f64,
            zcr_median: f64,
            zcr_mean: f64,
            mfcc_median: &'a [f64],
            mfcc_mean: &'a [f64],
            rms_median: f64,
            rms_mean: f64,
            hnr_median: f64,
            hnr_mean: f64,
            flatness_median: f64,
            flatness_mean: f64,
            contrast_median: &'a [f64],
            contrast_mean: &'a [f64],
            chroma_median: &'a [f64],
            chroma_mean: &'a [f64],
        }
        serde_json::to_value(Flat {
            f0_median: self.f0.median,
            f0_mean: self.f0.mean,
            centroid_median: self.centroid.median,
            centroid_mean: self.centroid.mean,
            bandwidth_median: self.bandwidth.median,
            bandwidth_mean: self.bandwidth.mean,
            rolloff_median: self.rolloff.median,
            rolloff_mean: self.rolloff.mean,
            zcr_median: self.zcr.median,
            zcr_mean: self.zcr.mean,
            mfcc_median: &self.mfcc.median,
            mfcc_mean: &self.mfcc.mean,
            rms_median: self.rms.median,
            rms_mean: self.rms.mean,
            hnr_median: self.hnr.median,
            hnr_mean: self.hnr.mean,
            flatness_median: self.flatness.median,
            flatness_mean: self.flatness.mean,
            contrast_median: &self.contrast.median,
            contrast_mean: &self.contrast.mean,
            chroma_median: &self.chroma.median,
            chroma_mean: &self.chroma.mean,
        })
        .expect("plain numbers serialize")
    }
}

/// Autocorrelation pitch of one raw frame.
///
/// The peak lag is searched over the 50–400 Hz band; the frame is unvoiced
/// (`None`) when the normalised peak `r[τ]/r[0]` is below 0.3.
pub fn pitch_per_frame(frame: &[f64], sample_rate: u32) -> Option<f64> {
    let sr = sample_rate as f64;
    let min_lag = (sr / PITCH_MAX_HZ).ceil() as usize;
    let max_lag = ((sr / PITCH_MIN_HZ).floor() as usize).min(frame.len().saturating_sub(1));
    if min_lag == 0 || min_lag > max_lag {
        return None;
    }
    let r = dsp::autocorrelation(frame);
    if r[0] <= 0.0 {
        return None;
    }
    let mut best = min_lag;
    for lag in min_lag + 1..=max_lag {
        if r[lag] > r[best] {
            best = lag;
        }
    }
    (r[best] / r[0] >= VOICING_THRESHOLD).then(|| sr / best as f64)
}

/// Magnitude-weighted mean frequency in Hz.
pub fn spectral_centroid(mag_row: &[f64], sample_rate: u32, frame_size: usize) -> f64 {
    if mag_row.iter().all(|&m| m <= EPS) {
        return 0.0;
    }
    let total: f64 = mag_row.iter().sum();
    let weighted: f64 = mag_row
        .iter()
        .enumerate()
        .map(|(k, &m)| bin_frequency(k, sample_rate, frame_size) * m)
        .sum();
    weighted / total
}

/// Magnitude-weighted standard deviation of frequency about `centroid`.
pub fn spectral_bandwidth(mag_row: &[f64], centroid: f64, sample_rate: u32, frame_size: usize) -> f64 {
    if mag_row.iter().all(|&m| m <= EPS) {
        return 0.0;
    }
    let total: f64 = mag_row.iter().sum();
    let spread: f64 = mag_row
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let d = bin_frequency(k, sample_rate, frame_size) - centroid;
            d * d * m
        })
        .sum();
    (spread / total).max(0.0).sqrt()
}

/// Frequency of the first bin at which the cumulative magnitude reaches
/// `alpha` of the total.
pub fn spectral_rolloff(mag_row: &[f64], alpha: f64, sample_rate: u32, frame_size: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadAlpha(alpha));
    }
    let total: f64 = mag_row.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let threshold = alpha * total;
    let mut cumulative = 0.0;
    for (k, &m) in mag_row.iter().enumerate() {
        cumulative += m;
        if cumulative >= threshold {
            return Ok(bin_frequency(k, sample_rate, frame_size));
        }
    }
    Ok(bin_frequency(mag_row.len() - 1, sample_rate, frame_size))
}

/// Fraction of adjacent sample pairs with strictly opposite signs.
pub fn zero_crossing_rate(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let crossings = frame.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    crossings as f64 / (frame.len() - 1) as f64
}

pub fn rms_energy(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt()
}

/// Geometric over arithmetic mean of a power row, each bin floored at ε.
pub fn spectral_flatness(power_row: &[f64]) -> f64 {
    if power_row.is_empty() {
        return 0.0;
    }
    let n = power_row.len() as f64;
    let floored = power_row.iter().map(|&p| p.max(EPS));
    let log_mean = floored.clone().map(f64::ln).sum::<f64>() / n;
    let mean = floored.sum::<f64>() / n;
    (log_mean.exp() / mean).clamp(0.0, 1.0)
}

/// Triangular HTK-mel filterbank over the one-sided bins of a frame.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Array2<f64>,
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

impl MelFilterbank {
    /// `n_mels` filters with edges equally spaced in mel from 0 Hz to Nyquist.
    pub fn new(sample_rate: u32, frame_size: usize, n_mels: usize) -> Self {
        let bins = frame_size / 2 + 1;
        let top = hz_to_mel(sample_rate as f64 / 2.0);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
            .collect();
        let weights = Array2::from_shape_fn((n_mels, bins), |(m, k)| {
            let f = bin_frequency(k, sample_rate, frame_size);
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            if f >= lo && f <= mid && mid > lo {
                (f - lo) / (mid - lo)
            } else if f > mid && f <= hi && hi > mid {
                (hi - f) / (hi - mid)
            } else {
                0.0
            }
        });
        Self { weights }
    }

    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    /// Filter energies `E_m`, floored at ε.
    pub fn energies(&self, power_row: &[f64]) -> Vec<f64> {
        self.weights
            .rows()
            .into_iter()
            .map(|w| {
                w.iter()
                    .zip(power_row)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .max(EPS)
            })
            .collect()
    }
}

/// Unnormalised DCT-II of log energies:
/// `C_n = Σ_m ln(E_m)·cos(πn/M·(m + ½))`, first `n_coeffs` terms.
pub fn cepstrum(energies: &[f64], n_coeffs: usize) -> Vec<f64> {
    let m_total = energies.len() as f64;
    let logs: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
    (0..n_coeffs)
        .map(|n| {
            logs.iter()
                .enumerate()
                .map(|(m, l)| {
                    l * (std::f64::consts::PI * n as f64 / m_total * (m as f64 + 0.5)).cos()
                })
                .sum()
        })
        .collect()
}

pub fn mfcc_with(bank: &MelFilterbank, power_row: &[f64], n_coeffs: usize) -> Vec<f64> {
    cepstrum(&bank.energies(power_row), n_coeffs)
}

/// MFCCs of one power row with a freshly built filterbank.
pub fn mfcc(power_row: &[f64], sample_rate: u32, frame_size: usize, n_mels: usize, n_coeffs: usize) -> Vec<f64> {
    mfcc_with(&MelFilterbank::new(sample_rate, frame_size, n_mels), power_row, n_coeffs)
}

/// Bin index ranges of the six contrast bands.
pub fn contrast_bands(sample_rate: u32, frame_size: usize) -> Result<Vec<std::ops::Range<usize>>> {
    let bins = frame_size / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let mut bands = Vec::with_capacity(N_CONTRAST_BANDS);
    for (b, &lo) in CONTRAST_EDGES.iter().enumerate() {
        let last = b + 1 == N_CONTRAST_BANDS;
        let hi = if last { nyquist } else { CONTRAST_EDGES[b + 1] };
        let inside = |k: &usize| {
            let f = bin_frequency(*k, sample_rate, frame_size);
            f >= lo && (f < hi || (last && f <= hi))
        };
        let start = (0..bins).find(inside);
        let end = (0..bins).rev().find(inside);
        match (start, end) {
            (Some(s), Some(e)) if hi >= lo => bands.push(s..e + 1),
            _ => {
                return Err(Error::BandEmpty {
                    band: b,
                    sample_rate,
                })
            }
        }
    }
    Ok(bands)
}

/// Per-band peak-to-valley ratio in dB, `10·log10(max/min)`, both floored at ε.
pub fn spectral_contrast(mag_row: &[f64], sample_rate: u32, frame_size: usize) -> Result<Vec<f64>> {
    let bands = contrast_bands(sample_rate, frame_size)?;
    Ok(contrast_in_bands(mag_row, &bands))
}

fn contrast_in_bands(mag_row: &[f64], bands: &[std::ops::Range<usize>]) -> Vec<f64> {
    bands
        .iter()
        .map(|band| {
            let slice = &mag_row[band.clone()];
            let peak = slice.iter().copied().fold(f64::MIN, f64::max).max(EPS);
            let valley = slice.iter().copied().fold(f64::MAX, f64::min).max(EPS);
            10.0 * (peak / valley).log10()
        })
        .collect()
}

/// Pitch class of a frequency, 0 = C, 9 = A (440 Hz).
pub fn pitch_class(freq: f64) -> usize {
    ((12.0 * (freq / 440.0).log2()).round() as i64 + 9).rem_euclid(12) as usize
}

/// Magnitude folded onto the twelve pitch classes, DC excluded.
pub fn chroma(mag_row: &[f64], sample_rate: u32, frame_size: usize) -> Vec<f64> {
    let mut out = vec![0.0; N_CHROMA];
    for (k, &m) in mag_row.iter().enumerate().skip(1) {
        out[pitch_class(bin_frequency(k, sample_rate, frame_size))] += m;
    }
    out
}

/// Harmonic-to-percussive RMS ratio of a clip.
///
/// The magnitude spectrogram is median-filtered along time (harmonic) and
/// along frequency (percussive), each component is resynthesised through a
/// soft mask, and the RMS values of the two are divided. Both RMS values
/// skip the clip edges where the overlap-add window energy is below
/// [`HNR_EDGE_FLOOR`] of its peak; dividing by a near-zero normaliser there
/// turns masking residue into large spurious samples.
pub fn hnr(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<f64> {
    let spec = dsp::stft(clip, cfg)?;
    let mags = spec.magnitudes();
    let harmonic = dsp::median_filter_2d(&mags, FilterAxis::Time, HPSS_KERNEL)?;
    let percussive = dsp::median_filter_2d(&mags, FilterAxis::Frequency, HPSS_KERNEL)?;
    let h2 = harmonic.mapv(|v| v * v);
    let p2 = percussive.mapv(|v| v * v);
    let denom = &h2 + &p2 + cfg.epsilon;
    let mask_h = &h2 / &denom;
    let mask_p = &p2 / &denom;
    let h_sig = dsp::istft(&spec.masked(&mask_h)?, cfg)?;
    let p_sig = dsp::istft(&spec.masked(&mask_p)?, cfg)?;
    let norm = dsp::window_sum_square(spec.frames(), cfg);
    let floor = HNR_EDGE_FLOOR * norm.iter().cloned().fold(0.0, f64::max);
    let keep = |sig: &[f64]| -> Vec<f64> {
        sig.iter().zip(&norm).filter(|(_, &n)| n >= floor).map(|(&v, _)| v).collect()
    };
    Ok(rms_energy(&keep(&h_sig)) / (rms_energy(&keep(&p_sig)) + cfg.epsilon))
}

/// Everything measured on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub f0: Option<f64>,
    pub centroid: f64,
    pub bandwidth: f64,
    pub rolloff: f64,
    pub zcr: f64,
    pub mfcc: Vec<f64>,
    pub rms: f64,
    pub flatness: f64,
    pub contrast: Vec<f64>,
    pub chroma: Vec<f64>,
}

/// Per-frame features for every full frame of the clip, in frame order.
pub fn frame_features(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<Vec<FrameFeatures>> {
    let spec = dsp::stft(clip, cfg)?;
    let sr = clip.sample_rate();
    let fs = cfg.frame_size;
    let bank = MelFilterbank::new(sr, fs, N_MELS);
    let bands = contrast_bands(sr, fs)?;
    let mags = spec.magnitudes();
    let power = spec.power();

    (0..spec.frames())
        .into_par_iter()
        .map(|t| {
            let raw = &clip.samples()[t * cfg.hop..t * cfg.hop + fs];
            let mag = mags.row(t);
            let mag = mag.as_slice().expect("standard layout");
            let pow = power.row(t);
            let pow = pow.as_slice().expect("standard layout");
            let centroid = spectral_centroid(mag, sr, fs);
            Ok(FrameFeatures {
                f0: pitch_per_frame(raw, sr),
                centroid,
                bandwidth: spectral_bandwidth(mag, centroid, sr, fs),
                rolloff: spectral_rolloff(mag, ROLLOFF_FRACTION, sr, fs)?,
                zcr: zero_crossing_rate(raw),
                mfcc: mfcc_with(&bank, pow, N_MFCC),
                rms: rms_energy(raw),
                flatness: spectral_flatness(pow),
                contrast: contrast_in_bands(mag, &bands),
                chroma: chroma(mag, sr, fs),
            })
        })
        .collect()
}

fn summarize(values: impl Iterator<Item = f64>) -> Summary {
    let v: Vec<f64> = values.collect();
    match dsp::median_and_mean(&v) {
        Ok((median, mean)) => Summary { median, mean },
        Err(_) => Summary::default(),
    }
}

fn summarize_vectors<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, len: usize) -> VectorSummary {
    let mut out = VectorSummary::zeros(len);
    for i in 0..len {
        let s = summarize(rows.clone().map(|r| r[i]));
        out.median[i] = s.median;
        out.mean[i] = s.mean;
    }
    out
}

/// Computes the full [`FeatureSet`] of a clip.
pub fn extract_voice_features(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<FeatureSet> {
    let frames = frame_features(clip, cfg)?;
    let ratio = hnr(clip, cfg)?;
    Ok(FeatureSet {
        f0: summarize(frames.iter().filter_map(|f| f.f0)),
        centroid: summarize(frames.iter().map(|f| f.centroid)),
        bandwidth: summarize(frames.iter().map(|f| f.bandwidth)),
        rolloff: summarize(frames.iter().map(|f| f.rolloff)),
        zcr: summarize(frames.iter().map(|f| f.zcr)),
        mfcc: summarize_vectors(frames.iter().map(|f| f.mfcc.as_slice()), N_MFCC),
        rms: summarize(frames.iter().map(|f| f.rms)),
        hnr: Summary {
            median: ratio,
            mean: ratio,
        },
        flatness: summarize(frames.iter().map(|f| f.flatness)),
        contrast: summarize_vectors(frames.iter().map(|f| f.contrast.as_slice()), N_CONTRAST_BANDS),
        chroma: summarize_vectors(frames.iter().map(|f| f.chroma.as_slice()), N_CHROMA),
    })
}
