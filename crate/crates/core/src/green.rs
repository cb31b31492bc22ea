//! Waveform ⇄ grayscale raster codec.
//!
//! Layout of a waveform raster of side `S`:
//!
//! * row 0 holds the ASCII header `L:<length>;SR:<sample rate>`, padded
//!   with zero bytes to `S`;
//! * the remaining `S² − S` cells hold one sample each, row-major, mapped
//!   by `round_half_up((x + 1) / 2 · 255)`;
//! * cells past the last sample hold 128, the code of `x = 0`.

use crate::audio::{AudioClip, MIN_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Pixel value written to unused trailing cells.
pub const TAIL_FILL: u8 = 128;

/// Length and sample rate stored in the header row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub length: usize,
    pub sample_rate: u32,
}

/// Number of sample cells in a raster of side `side`.
pub fn capacity(side: usize) -> usize {
    side * side - side
}

/// Smallest `S` with `S² − S ≥ length`.
pub fn required_side(length: usize) -> usize {
    let length = length.max(1);
    // start just below the real root of S² − S − L = 0 and walk up
    let mut side = ((1.0 + (1.0 + 4.0 * length as f64).sqrt()) / 2.0).floor() as usize;
    side = side.saturating_sub(2).max(2);
    while capacity(side) < length {
        side += 1;
    }
    side
}

pub fn format_header(h: &Header) -> Vec<u8> {
    format!("L:{};SR:{}", h.length, h.sample_rate).into_bytes()
}

/// Parses the header from a raster's first row. Reading stops at the first
/// zero byte or at the end of the row.
pub fn parse_header(row: &[u8]) -> Result<Header> {
    let end = row.iter().position(|&b| b == 0).unwrap_or(row.len());
    let text = std::str::from_utf8(&row[..end])
        .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;

    let (l_part, sr_part) = text
        .split_once(';')
        .ok_or_else(|| Error::MalformedHeader(format!("missing ';' in {text:?}")))?;
    let length = parse_field(l_part, "L")?;
    let sample_rate = parse_field(sr_part, "SR")?;

    if length == 0 {
        return Err(Error::HeaderOutOfRange("L must be at least 1".into()));
    }
    let sample_rate = u32::try_from(sample_rate)
        .map_err(|_| Error::HeaderOutOfRange(format!("SR {sample_rate} too large")))?;
    if sample_rate < MIN_SAMPLE_RATE {
        return Err(Error::HeaderOutOfRange(format!(
            "SR {sample_rate} below {MIN_SAMPLE_RATE}"
        )));
    }
    Ok(Header {
        length: length as usize,
        sample_rate,
    })
}

fn parse_field(part: &str, key: &str) -> Result<u64> {
    let digits = part
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(':'))
        .ok_or_else(|| Error::MalformedHeader(format!("expected {key}:<int>, got {part:?}")))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::MalformedHeader(format!(
            "{key} value {digits:?} is not a decimal integer"
        )));
    }
    digits
        .parse()
        .map_err(|_| Error::MalformedHeader(format!("{key} value {digits:?} overflows")))
}

/// Maps a sample in `[-1, 1]` to its pixel code. Out-of-range input is clamped.
pub fn sample_to_pixel(x: f64) -> u8 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
    ((x + 1.0) / 2.0 * 255.0 + 0.5).floor() as u8
}

pub fn pixel_to_sample(p: u8) -> f64 {
    p as f64 / 255.0 * 2.0 - 1.0
}

/// Encodes a clip into a headed raster.
///
/// Without `fixed_side` the side is the smallest one that holds both the
/// samples and the header text.
pub fn encode_waveform(clip: &AudioClip, fixed_side: Option<usize>) -> Result<GrayImage> {
    let header = format_header(&Header {
        length: clip.len(),
        sample_rate: clip.sample_rate(),
    });
    let side = match fixed_side {
        Some(side) => {
            if side < 2 || capacity(side) < clip.len() || header.len() > side {
                return Err(Error::CapacityExceeded {
                    len: clip.len(),
                    side,
                    capacity: if side < 2 { 0 } else { capacity(side) },
                });
            }
            side
        }
        None => required_side(clip.len()).max(header.len()),
    };

    let mut pixels = vec![0u8; side * side];
    pixels[..header.len()].copy_from_slice(&header);
    let body = &mut pixels[side..];
    for (cell, &x) in body.iter_mut().zip(clip.samples()) {
        *cell = sample_to_pixel(x);
    }
    body[clip.len()..].fill(TAIL_FILL);
    GrayImage::new(side, pixels)
}

pub fn decode_waveform(image: &GrayImage) -> Result<AudioClip> {
    let header = parse_header(image.row(0))?;
    let cap = capacity(image.side());
    if header.length > cap {
        return Err(Error::LengthExceedsCapacity {
            len: header.length,
            capacity: cap,
        });
    }
    let samples = image.pixels()[image.side()..image.side() + header.length]
        .iter()
        .map(|&p| pixel_to_sample(p))
        .collect();
    AudioClip::new(samples, header.sample_rate)
}
