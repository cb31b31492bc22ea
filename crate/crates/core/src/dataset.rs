//! Synthetic speakers, corpus generation, and image augmentation.
//!
//! Each utterance is a glottal impulse train pushed through three cascaded
//! two-pole formant resonators, with optional white noise on top. Every
//! random choice flows from [`SplitMix64`] seeds, so a corpus is a pure
//! function of its master seed.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::dsp::AnalysisConfig;
use crate::error::{Error, Result};
use crate::fingerprint::{fuse_with_features, MAX_SAMPLES};
use crate::raster::{load_png, GrayImage, RgbImage};
use crate::rng::{derive_seed, SplitMix64};

pub const DEFAULT_SAMPLE_RATE: u32 = 22050;
pub const MIN_DURATION_SECS: f64 = 2.0;
pub const MAX_DURATION_SECS: f64 = 5.0;
pub const MANIFEST_FILE: &str = "manifest.csv";
const PEAK: f64 = 0.9;

/// Parameters of one synthetic voice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerProfile {
    pub name: String,
    pub f0_base: f64,
    /// Half-width of the uniform per-utterance pitch offset, Hz.
    pub f0_jitter: f64,
    pub formants: [f64; 3],
    pub formant_bandwidths: [f64; 3],
    /// White-noise amplitude relative to the voiced peak.
    pub noise_level: f64,
}

impl SpeakerProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadParameter(format!("profile {:?}: {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\', ',']) {
            return bad("name must be a plain non-empty label".into());
        }
        if !(60.0..=350.0).contains(&self.f0_base) {
            return bad(format!("f0_base {} outside [60, 350] Hz", self.f0_base));
        }
        if !(self.f0_jitter >= 0.0) {
            return bad("negative jitter".into());
        }
        if !self.formants.windows(2).all(|w| w[0] < w[1]) || self.formants[0] <= 0.0 {
            return bad("formants must be positive and ascending".into());
        }
        if self.formant_bandwidths.iter().any(|&b| !(b > 0.0)) {
            return bad("formant bandwidths must be positive".into());
        }
        if !(0.0..=0.5).contains(&self.noise_level) {
            return bad(format!("noise level {} outside [0, 0.5]", self.noise_level));
        }
        Ok(())
    }

    pub fn alto() -> Self {
        Self {
            name: "alto".into(),
            f0_base: 210.0,
            f0_jitter: 20.0,
            formants: [800.0, 1200.0, 2500.0],
            formant_bandwidths: [80.0, 90.0, 120.0],
            noise_level: 0.02,
        }
    }

    pub fn bass() -> Self {
        Self {
            name: "bass".into(),
            f0_base: 120.0,
            f0_jitter: 15.0,
            formants: [600.0, 900.0, 2200.0],
            formant_bandwidths: [70.0, 80.0, 110.0],
            noise_level: 0.02,
        }
    }
}

pub fn default_profiles() -> Vec<SpeakerProfile> {
    vec![SpeakerProfile::alto(), SpeakerProfile::bass()]
}

/// Two-pole resonator `y[n] = a·x[n] + b·y[n−1] + c·y[n−2]` with unit DC gain.
fn resonate(x: &[f64], freq: f64, bandwidth: f64, sample_rate: f64) -> Vec<f64> {
    let t = 1.0 / sample_rate;
    let c = -(-2.0 * std::f64::consts::PI * bandwidth * t).exp();
    let b = 2.0 * (-std::f64::consts::PI * bandwidth * t).exp() * (2.0 * std::f64::consts::PI * freq * t).cos();
    let a = 1.0 - b - c;
    let (mut y1, mut y2) = (0.0, 0.0);
    x.iter()
        .map(|&v| {
            let y = a * v + b * y1 + c * y2;
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

fn peak_normalize(x: &mut [f64], peak: f64) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        let g = peak / max;
        x.iter_mut().for_each(|v| *v *= g);
    }
}

/// Renders one utterance. Same `(profile, seed, duration, sample_rate)`
/// always gives the same samples.
pub fn synth_utterance(
    profile: &SpeakerProfile,
    seed: u64,
    duration_secs: f64,
    sample_rate: u32,
) -> Result<AudioClip> {
    profile.validate()?;
    if sample_rate < 12800 {
        return Err(Error::BadParameter(format!(
            "sample rate {sample_rate} Hz below 12800 Hz"
        )));
    }
    let len = (duration_secs * sample_rate as f64).round();
    if !(len >= 1.0) || len > MAX_SAMPLES as f64 {
        return Err(Error::CapacityExceeded {
            len: if len.is_finite() && len > 0.0 { len as usize } else { 0 },
            side: crate::fingerprint::IMAGE_SIDE,
            capacity: MAX_SAMPLES,
        });
    }
    let len = len as usize;
    let sr = sample_rate as f64;

    let mut rng = SplitMix64::new(seed);
    let f0 = profile.f0_base + rng.uniform(-profile.f0_jitter, profile.f0_jitter);
    let period = sr / f0;

    let mut signal = vec![0.0; len];
    let mut k = 0usize;
    loop {
        let pos = (k as f64 * period).round() as usize;
        if pos >= len {
            break;
        }
        signal[pos] = 1.0;
        k += 1;
    }
    for (&f, &bw) in profile.formants.iter().zip(&profile.formant_bandwidths) {
        signal = resonate(&signal, f, bw, sr);
    }
    peak_normalize(&mut signal, 1.0);
    if profile.noise_level > 0.0 {
        for v in signal.iter_mut() {
            *v += profile.noise_level * rng.uniform(-1.0, 1.0);
        }
    }
    peak_normalize(&mut signal, PEAK);
    AudioClip::clamped(signal, sample_rate)
}

/// Seed of utterance `index` of speaker `speaker` under `master`.
pub fn utterance_seed(master: u64, speaker: usize, index: usize) -> u64 {
    derive_seed(master, speaker as u64, index as u64)
}

/// Utterance length drawn uniformly from 2–5 s for a given utterance seed.
pub fn utterance_duration(seed: u64) -> f64 {
    let mut rng = SplitMix64::new(derive_seed(seed, u64::MAX, 0));
    rng.uniform(MIN_DURATION_SECS, MAX_DURATION_SECS)
}

/// One manifest row. `path` is relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    /// Directory that entry paths are relative to.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        if self.entries.is_empty() {
            w.write_record(["path", "label", "seed"])
                .map_err(|e| Error::BadManifest(e.to_string()))?;
        }
        for e in &self.entries {
            w.serialize(e).map_err(|e| Error::BadManifest(e.to_string()))?;
        }
        w.into_inner().map_err(|e| Error::BadManifest(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let headers = r.headers().map_err(|e| Error::BadManifest(e.to_string()))?;
        if headers != vec!["path", "label", "seed"] {
            return Err(Error::BadManifest(format!(
                "expected header path,label,seed, got {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let entries = r
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| Error::BadManifest(e.to_string()))?;
        Ok(Self {
            root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            entries,
        })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }
}

/// A fingerprint with its speaker label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: RgbImage,
    pub label: String,
    pub source_seed: u64,
}

/// Renders `per_speaker` utterances for every profile, writes each
/// fingerprint to `out_dir/<label>/<index>.png`, and writes
/// `out_dir/manifest.csv`.
///
/// Utterances render in parallel; output bytes do not depend on the
/// thread count.
pub fn generate_dataset(
    profiles: &[SpeakerProfile],
    per_speaker: usize,
    out_dir: impl AsRef<Path>,
    seed: u64,
) -> Result<Manifest> {
    if per_speaker < 2 {
        return Err(Error::BadParameter(format!(
            "per_speaker must be at least 2, got {per_speaker}"
        )));
    }
    let mut names: Vec<&str> = profiles.iter().map(|p| p.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != profiles.len() {
        return Err(Error::BadParameter("speaker names must be unique".into()));
    }
    for p in profiles {
        p.validate()?;
    }

    let out_dir = out_dir.as_ref();
    for p in profiles {
        fs::create_dir_all(out_dir.join(&p.name))?;
    }

    let jobs: Vec<(usize, usize)> = (0..profiles.len())
        .flat_map(|s| (0..per_speaker).map(move |i| (s, i)))
        .collect();
    let cfg = AnalysisConfig::default();
    let entries = jobs
        .par_iter()
        .map(|&(s, i)| {
            let profile = &profiles[s];
            let seed = utterance_seed(seed, s, i);
            let clip = synth_utterance(profile, seed, utterance_duration(seed), DEFAULT_SAMPLE_RATE)?;
            let (img, _) = fuse_with_features(&clip, &cfg)?;
            let rel = format!("{}/{}.png", profile.name, i);
            img.save_png(out_dir.join(&rel))?;
            Ok(ManifestEntry {
                path: rel,
                label: profile.name.clone(),
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        entries,
    };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Reads every image a manifest lists.
pub fn load_images(manifest: &Manifest) -> Result<Vec<LabeledImage>> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let image = load_png(manifest.resolve(e))?.into_rgb()?;
            Ok(LabeledImage {
                image,
                label: e.label.clone(),
                source_seed: e.seed,
            })
        })
        .collect()
}

/// Stratified split: within each label, rows are shuffled with `seed` and
/// the first `round(n·train_fraction)` go to training. Returns
/// `(train, test)` index lists, each in manifest order.
pub fn split_indices(labels: &[String], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::BadParameter(format!(
            "split {train_fraction} outside [0, 1]"
        )));
    }
    let mut classes: Vec<&String> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (ci, class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| &labels[i] == *class).collect();
        SplitMix64::new(derive_seed(seed, 0x5711, ci as u64)).shuffle(&mut members);
        let cut = (members.len() as f64 * train_fraction).round() as usize;
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Geometric augmentations applied to whole fingerprints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AugmentOp {
    HorizontalFlip,
    /// Radians, within ±0.1.
    Rotate(f64),
    /// Scale factor, within [0.9, 1.1].
    Zoom(f64),
}

impl AugmentOp {
    /// Picks one of the three operations uniformly, with a uniform angle or
    /// scale inside its allowed range.
    pub fn random(rng: &mut SplitMix64) -> Self {
        match rng.below(3) {
            0 => AugmentOp::HorizontalFlip,
            1 => AugmentOp::Rotate(rng.uniform(-0.1, 0.1)),
            _ => AugmentOp::Zoom(rng.uniform(0.9, 1.1)),
        }
    }
}

pub fn augment(img: &RgbImage, op: AugmentOp) -> Result<RgbImage> {
    match op {
        AugmentOp::HorizontalFlip => {
            let mut out = img.clone();
            for plane in out.planes_mut() {
                let side = plane.side();
                for row in plane.pixels_mut().chunks_exact_mut(side) {
                    row.reverse();
                }
            }
            Ok(out)
        }
        AugmentOp::Rotate(theta) => {
            if !(-0.1..=0.1).contains(&theta) {
                return Err(Error::BadParameter(format!("rotation {theta} outside ±0.1 rad")));
            }
            if theta == 0.0 {
                return Ok(img.clone());
            }
            let (sin, cos) = theta.sin_cos();
            // inverse mapping: output pixel ← input at R(−θ)·(p − c) + c
            Ok(resample(img, |dy, dx| (cos * dy - sin * dx, sin * dy + cos * dx)))
        }
        AugmentOp::Zoom(scale) => {
            if !(0.9..=1.1).contains(&scale) {
                return Err(Error::BadParameter(format!("zoom {scale} outside [0.9, 1.1]")));
            }
            if scale == 1.0 {
                return Ok(img.clone());
            }
            Ok(resample(img, |dy, dx| (dy / scale, dx / scale)))
        }
    }
}

/// Applies one random augmentation chosen by `seed`.
pub fn random_augment(img: &RgbImage, seed: u64) -> RgbImage {
    let op = AugmentOp::random(&mut SplitMix64::new(seed));
    augment(img, op).expect("random ops stay in range")
}

/// Bilinear inverse-mapped resampling about the image centre; source
/// positions outside the image read as 0.
fn resample(img: &RgbImage, map: impl Fn(f64, f64) -> (f64, f64)) -> RgbImage {
    let side = img.side();
    let c = (side as f64 - 1.0) / 2.0;
    let planes = img.planes().map(|plane| {
        let src = plane.pixels();
        let at = |y: isize, x: isize| -> f64 {
            if y < 0 || x < 0 || y >= side as isize || x >= side as isize {
                0.0
            } else {
                src[y as usize * side + x as usize] as f64
            }
        };
        let mut out = vec![0u8; side * side];
        for y in 0..side {
            for x in 0..side {
                let (sy, sx) = map(y as f64 - c, x as f64 - c);
                let (sy, sx) = (sy + c, sx + c);
                let (y0, x0) = (sy.floor(), sx.floor());
                let (fy, fx) = (sy - y0, sx - x0);
                let (y0, x0) = (y0 as isize, x0 as isize);
                let v = at(y0, x0) * (1.0 - fy) * (1.0 - fx)
                    + at(y0, x0 + 1) * (1.0 - fy) * fx
                    + at(y0 + 1, x0) * fy * (1.0 - fx)
                    + at(y0 + 1, x0 + 1) * fy * fx;
                out[y * side + x] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
            }
        }
        GrayImage::new(side, out).expect("same side")
    });
    let [r, g, b] = planes;
    RgbImage::merge(r, g, b).expect("same side")
}
