//! Mono 16-bit PCM WAV input and output.
//!
//! Samples are held as `f64` in `[-1, 1]`. Loading divides by 32768 so that
//! `-32768` maps exactly to `-1.0`. Saving uses the same scale, rounds, and
//! clamps to the `i16` range, so `1.0` is stored as 32767 and a save/load
//! round trip stays within one LSB.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Lowest sample rate accepted anywhere in the pipeline.
pub const MIN_SAMPLE_RATE: u32 = 8000;

const WAVE_FORMAT_PCM: u16 = 1;

/// A mono signal with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, rejecting empty input, out-of-range samples, and sample
    /// rates below [`MIN_SAMPLE_RATE`].
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
            return Err(Error::InvalidClip(format!("sample {bad} outside [-1, 1]")));
        }
        Self::checked(samples, sample_rate)
    }

    /// Like [`AudioClip::new`] but clamps samples into `[-1, 1]` (NaN becomes 0).
    pub fn clamped(mut samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        for s in samples.iter_mut() {
            *s = if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) };
        }
        Self::checked(samples, sample_rate)
    }

    fn checked(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyAudio);
        }
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::InvalidClip(format!(
                "sample rate {sample_rate} Hz below {MIN_SAMPLE_RATE} Hz"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; a clip holds at least one sample.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes)
}

/// Parses an in-memory RIFF/WAVE file by walking its chunks.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::NotWav);
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::NotWav);
                }
                let format = u16::from_le_bytes([body[0], body[1]]);
                let channels = u16::from_le_bytes([body[2], body[3]]);
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes([body[14], body[15]]);
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }

    let (format, channels, sample_rate, bits) = fmt.ok_or(Error::NotWav)?;
    if format != WAVE_FORMAT_PCM || bits != 16 {
        return Err(Error::UnsupportedEncoding { format, bits });
    }
    if channels == 0 {
        return Err(Error::NotWav);
    }
    let data = data.ok_or(Error::EmptyAudio)?;

    let channels = channels as usize;
    let samples: Vec<f64> = data
        .chunks_exact(2 * channels)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
                .sum();
            (sum / channels as f64).clamp(-1.0, 1.0)
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyAudio);
    }
    AudioClip::checked(samples, sample_rate)
}

/// Quantizes one sample to its stored 16-bit value.
pub fn quantize_sample(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Serializes a clip as a canonical 44-byte-header mono PCM WAV.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        out.extend_from_slice(&quantize_sample(s).to_le_bytes());
    }
    out
}

pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_wav(clip))?;
    Ok(())
}
