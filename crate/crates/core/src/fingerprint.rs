//! The fused 512×512 RGB fingerprint.
//!
//! * **Red**: the 78-element [`FlatFeatureVector`], min-max normalised to
//!   bytes, tiled row-major until the plane is full.
//! * **Green**: the headed waveform raster of [`crate::green`] at side 512.
//! * **Blue**: a 4×4 grid of 128×128 patches, one per feature family in
//!   [`PATCH_ORDER`]; the five trailing cells are mid-gray (127).
//!
//! Flat vector layout (indices):
//!
//! | range   | content              |
//! |---------|----------------------|
//! | 0..10   | f0, centroid, bandwidth, rolloff, zcr (median, mean each) |
//! | 10..23  | mfcc median          |
//! | 23..36  | mfcc mean            |
//! | 36..38  | rms median, mean     |
//! | 38..40  | hnr median, mean     |
//! | 40..46  | contrast median      |
//! | 46..52  | contrast mean        |
//! | 52..54  | flatness median, mean|
//! | 54..66  | chroma median        |
//! | 66..78  | chroma mean          |

use crate::audio::AudioClip;
use crate::dsp::{lin_resample, AnalysisConfig};
use crate::error::{Error, Result};
use crate::features::{extract_voice_features, FeatureSet, Summary, VectorSummary};
use crate::green::{self, capacity, decode_waveform, encode_waveform};
use crate::raster::{GrayImage, RgbImage};

pub const IMAGE_SIDE: usize = 512;
pub const PLANE_LEN: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const FLAT_LEN: usize = 78;
pub const GRID_ROWS: usize = 4;
pub const GRID_COLS: usize = 4;
pub const PATCH_SIDE: usize = IMAGE_SIDE / GRID_COLS;
pub const FILL_VALUE: u8 = 127;
/// Longest clip the green plane can carry.
pub const MAX_SAMPLES: usize = IMAGE_SIDE * IMAGE_SIDE - IMAGE_SIDE;

const NORM_EPS: f64 = 1e-10;

/// A feature family as laid out on the blue plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    F0,
    Centroid,
    Bandwidth,
    Rolloff,
    Zcr,
    Mfcc,
    Rms,
    Hnr,
    Contrast,
    Chroma,
    Flatness,
}

/// Blue-plane patch order, filled row-major into the grid.
pub const PATCH_ORDER: [Family; 11] = [
    Family::F0,
    Family::Centroid,
    Family::Bandwidth,
    Family::Rolloff,
    Family::Zcr,
    Family::Mfcc,
    Family::Rms,
    Family::Hnr,
    Family::Contrast,
    Family::Chroma,
    Family::Flatness,
];

impl Family {
    pub fn is_vector(self) -> bool {
        matches!(self, Family::Mfcc | Family::Contrast | Family::Chroma)
    }

    /// Fixed physical range used to normalise a scalar family.
    pub fn scalar_range(self, sample_rate: u32) -> Option<(f64, f64)> {
        let nyquist = sample_rate as f64 / 2.0;
        match self {
            Family::F0 => Some((0.0, 500.0)),
            Family::Centroid | Family::Bandwidth | Family::Rolloff => Some((0.0, nyquist)),
            Family::Zcr | Family::Rms | Family::Flatness => Some((0.0, 1.0)),
            Family::Hnr => Some((0.0, 10.0)),
            Family::Mfcc | Family::Contrast | Family::Chroma => None,
        }
    }
}

/// The 78 feature values in their documented order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatFeatureVector(Vec<f64>);

impl FlatFeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FLAT_LEN {
            return Err(Error::BadParameter(format!(
                "flat feature vector needs {FLAT_LEN} values, got {}",
                values.len()
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn flatten_features(fs: &FeatureSet) -> FlatFeatureVector {
    let mut out = Vec::with_capacity(FLAT_LEN);
    let pair = |out: &mut Vec<f64>, s: &Summary| out.extend([s.median, s.mean]);
    let vector = |out: &mut Vec<f64>, v: &VectorSummary| {
        out.extend_from_slice(&v.median);
        out.extend_from_slice(&v.mean);
    };
    pair(&mut out, &fs.f0);
    pair(&mut out, &fs.centroid);
    pair(&mut out, &fs.bandwidth);
    pair(&mut out, &fs.rolloff);
    pair(&mut out, &fs.zcr);
    vector(&mut out, &fs.mfcc);
    pair(&mut out, &fs.rms);
    pair(&mut out, &fs.hnr);
    vector(&mut out, &fs.contrast);
    pair(&mut out, &fs.flatness);
    vector(&mut out, &fs.chroma);
    FlatFeatureVector(out)
}

fn round_byte(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// `(x − min)/(max − min + ε)·255` over the whole slice, before rounding.
pub fn min_max_scale(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    values
        .iter()
        .map(|&v| (v - lo) / (hi - lo + NORM_EPS) * 255.0)
        .collect()
}

/// Min-max normalises the vector jointly and tiles it over a 512×512 plane.
pub fn build_red(v: &FlatFeatureVector) -> GrayImage {
    let bytes: Vec<u8> = min_max_scale(v.values()).into_iter().map(round_byte).collect();
    let pixels: Vec<u8> = bytes.iter().copied().cycle().take(PLANE_LEN).collect();
    GrayImage::new(IMAGE_SIDE, pixels).expect("plane size")
}

/// Maps a scalar onto `[0, 255]` through a fixed range, clamping outside it.
pub fn normalize_scalar(value: f64, min_val: f64, max_val: f64) -> u8 {
    let t = if value.is_nan() {
        0.0
    } else {
        ((value - min_val) / (max_val - min_val)).clamp(0.0, 1.0)
    };
    round_byte(t * 255.0)
}

/// A square patch, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub side: usize,
    pub pixels: Vec<u8>,
}

impl Patch {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.side + col]
    }
}

/// Left half filled with the median, right half with the mean.
pub fn make_scalar_patch(median_norm: u8, mean_norm: u8, z: usize) -> Result<Patch> {
    if z == 0 || !z.is_multiple_of(2) {
        return Err(Error::BadZ(z));
    }
    let mut row = vec![median_norm; z / 2];
    row.resize(z, mean_norm);
    Ok(Patch {
        side: z,
        pixels: row.repeat(z),
    })
}

/// Each vector is normalised over its own components, stretched to `z`
/// columns, and repeated down its half: median on top, mean below.
pub fn make_vector_patch(med_vec: &[f64], mean_vec: &[f64], z: usize) -> Result<Patch> {
    if z == 0 || !z.is_multiple_of(2) {
        return Err(Error::BadZ(z));
    }
    if med_vec.is_empty() || med_vec.len() != mean_vec.len() {
        return Err(Error::BadParameter(
            "median and mean vectors must be non-empty and equally long".into(),
        ));
    }
    let row = |v: &[f64]| -> Vec<u8> {
        lin_resample(&min_max_scale(v), z)
            .into_iter()
            .map(round_byte)
            .collect()
    };
    let top = row(med_vec);
    let bottom = row(mean_vec);
    let mut pixels = Vec::with_capacity(z * z);
    for _ in 0..z / 2 {
        pixels.extend_from_slice(&top);
    }
    for _ in 0..z / 2 {
        pixels.extend_from_slice(&bottom);
    }
    Ok(Patch { side: z, pixels })
}

fn family_patch(fs: &FeatureSet, family: Family, sample_rate: u32) -> Patch {
    let scalar = |s: &Summary| {
        let (lo, hi) = family.scalar_range(sample_rate).expect("scalar family");
        make_scalar_patch(
            normalize_scalar(s.median, lo, hi),
            normalize_scalar(s.mean, lo, hi),
            PATCH_SIDE,
        )
    };
    let vector = |v: &VectorSummary| make_vector_patch(&v.median, &v.mean, PATCH_SIDE);
    match family {
        Family::F0 => scalar(&fs.f0),
        Family::Centroid => scalar(&fs.centroid),
        Family::Bandwidth => scalar(&fs.bandwidth),
        Family::Rolloff => scalar(&fs.rolloff),
        Family::Zcr => scalar(&fs.zcr),
        Family::Mfcc => vector(&fs.mfcc),
        Family::Rms => scalar(&fs.rms),
        Family::Hnr => scalar(&fs.hnr),
        Family::Contrast => vector(&fs.contrast),
        Family::Chroma => vector(&fs.chroma),
        Family::Flatness => scalar(&fs.flatness),
    }
    .expect("patch side is even and vectors are well formed")
}

/// Top-left pixel of grid cell `index` (row-major).
pub fn cell_origin(index: usize) -> (usize, usize) {
    ((index / GRID_COLS) * PATCH_SIDE, (index % GRID_COLS) * PATCH_SIDE)
}

/// Lays the eleven family patches on the 4×4 grid.
pub fn build_blue(fs: &FeatureSet, sample_rate: u32) -> GrayImage {
    let mut plane = GrayImage::filled(IMAGE_SIDE, FILL_VALUE).expect("plane size");
    for (index, &family) in PATCH_ORDER.iter().enumerate() {
        let patch = family_patch(fs, family, sample_rate);
        let (r0, c0) = cell_origin(index);
        for r in 0..PATCH_SIDE {
            let dst = (r0 + r) * IMAGE_SIDE + c0;
            plane.pixels_mut()[dst..dst + PATCH_SIDE]
                .copy_from_slice(&patch.pixels[r * PATCH_SIDE..(r + 1) * PATCH_SIDE]);
        }
    }
    plane
}

/// Builds the fingerprint from already-extracted features.
pub fn fuse_features(clip: &AudioClip, fs: &FeatureSet) -> Result<RgbImage> {
    let green = encode_waveform(clip, Some(IMAGE_SIDE))?;
    let red = build_red(&flatten_features(fs));
    let blue = build_blue(fs, clip.sample_rate());
    RgbImage::merge(red, green, blue)
}

/// Extracts features and builds the fingerprint, returning both.
pub fn fuse_with_features(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<(RgbImage, FeatureSet)> {
    if clip.len() > capacity(IMAGE_SIDE) {
        return Err(Error::CapacityExceeded {
            len: clip.len(),
            side: IMAGE_SIDE,
            capacity: capacity(IMAGE_SIDE),
        });
    }
    let fs = extract_voice_features(clip, cfg)?;
    Ok((fuse_features(clip, &fs)?, fs))
}

/// Clip → 512×512 RGB fingerprint with the default analysis settings.
pub fn fuse(clip: &AudioClip) -> Result<RgbImage> {
    fuse_with_features(clip, &AnalysisConfig::default()).map(|(img, _)| img)
}

/// Recovers the waveform from the green plane; red and blue are ignored.
pub fn recover_audio(img: &RgbImage) -> Result<AudioClip> {
    decode_waveform(&img.green)
}

/// Header of the green plane, without decoding samples.
pub fn read_header(img: &RgbImage) -> Result<green::Header> {
    green::parse_header(img.green.row(0))
}
