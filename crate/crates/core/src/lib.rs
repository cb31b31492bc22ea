//! Audio-to-image fingerprints.
//!
//! A clip becomes a 512×512 RGB image: the green plane stores the waveform
//! itself behind an ASCII header (and decodes back to audio), the red plane
//! tiles a normalised 78-element feature vector, and the blue plane lays
//! out one median/mean patch per feature family on a 4×4 grid. A baseline
//! softmax classifier and a synthetic two-speaker corpus show that the
//! representation separates speakers.

pub mod audio;
pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod features;
pub mod fingerprint;
pub mod green;
pub mod raster;
pub mod rng;

pub use audio::{load_wav, save_wav, AudioClip};
pub use error::{Error, Result};
pub use features::{extract_voice_features, FeatureSet};
pub use fingerprint::{fuse, recover_audio};
pub use raster::{GrayImage, RgbImage};
