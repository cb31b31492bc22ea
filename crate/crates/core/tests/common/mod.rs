#![allow(dead_code)]

use voximage::features::{FeatureSet, Summary, VectorSummary, N_CHROMA, N_CONTRAST_BANDS, N_MFCC};
use voximage::rng::SplitMix64;

pub const SR: u32 = 22050;

pub fn sine(freq: f64, sample_rate: u32, len: usize, amplitude: f64) -> Vec<f64> {
    (0..len)
        .map(|n| amplitude * (2.0 * std::f64::consts::PI * freq * n as f64 / sample_rate as f64).sin())
        .collect()
}

fn summary(rng: &mut SplitMix64, lo: f64, hi: f64) -> Summary {
    Summary {
        median: rng.uniform(lo, hi),
        mean: rng.uniform(lo, hi),
    }
}

fn vector(rng: &mut SplitMix64, len: usize, lo: f64, hi: f64) -> VectorSummary {
    VectorSummary {
        median: (0..len).map(|_| rng.uniform(lo, hi)).collect(),
        mean: (0..len).map(|_| rng.uniform(lo, hi)).collect(),
    }
}

/// Plausible but arbitrary feature values, some deliberately out of the
/// scalar ranges so clamping is exercised.
pub fn random_feature_set(seed: u64) -> FeatureSet {
    let mut rng = SplitMix64::new(seed);
    let hnr = rng.uniform(0.0, 20.0);
    FeatureSet {
        f0: summary(&mut rng, 0.0, 600.0),
        centroid: summary(&mut rng, 0.0, 11025.0),
        bandwidth: summary(&mut rng, 0.0, 6000.0),
        rolloff: summary(&mut rng, 0.0, 12000.0),
        zcr: summary(&mut rng, 0.0, 1.0),
        mfcc: vector(&mut rng, N_MFCC, -400.0, 200.0),
        rms: summary(&mut rng, 0.0, 1.0),
        hnr: Summary { median: hnr, mean: hnr },
        flatness: summary(&mut rng, 0.0, 1.0),
        contrast: vector(&mut rng, N_CONTRAST_BANDS, 0.0, 80.0),
        chroma: vector(&mut rng, N_CHROMA, 0.0, 50.0),
    }
}
