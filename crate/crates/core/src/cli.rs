//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 when the data is bad
//! (the error's name is printed on stderr).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::audio::{load_wav, save_wav};
use crate::classifier::{evaluate, train, Model, TrainConfig};
use crate::dataset::{default_profiles, generate_dataset, load_images, split_indices, LabeledImage, Manifest};
use crate::dsp::AnalysisConfig;
use crate::error::{Error, Result};
use crate::features::extract_voice_features;
use crate::fingerprint::fuse;
use crate::green::decode_waveform;
use crate::raster::load_png;

#[derive(Debug, Parser)]
#[command(name = "voximage", version, about = "Audio fingerprints as 512×512 RGB images")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fuse a WAV file into a fingerprint PNG.
    Encode { input: PathBuf, output: PathBuf },
    /// Recover the WAV stored in a PNG's waveform plane.
    Decode { input: PathBuf, output: PathBuf },
    /// Print the feature set of a WAV file.
    Features {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Render the synthetic two-speaker corpus.
    Dataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        per_speaker: usize,
    },
    /// Train the baseline classifier on the training part of a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Fraction of each class used for training.
        #[arg(long, default_value_t = 0.9)]
        split: f64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long)]
        augment: bool,
    },
    /// Score a model on the held-out part of a manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
        /// Training fraction used by `train`; its complement is scored.
        /// 0 scores every row.
        #[arg(long, default_value_t = 0.9)]
        split: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Report {
    Json,
    Text,
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            2
        }
    }
}

fn subset(manifest: &Manifest, split: f64, seed: u64, training: bool) -> Result<Vec<LabeledImage>> {
    let labels: Vec<String> = manifest.entries.iter().map(|e| e.label.clone()).collect();
    let (train_idx, test_idx) = split_indices(&labels, split, seed)?;
    let chosen = if training { train_idx } else { test_idx };
    let picked = Manifest {
        root: manifest.root.clone(),
        entries: chosen.into_iter().map(|i| manifest.entries[i].clone()).collect(),
    };
    load_images(&picked)
}

fn execute(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Encode { input, output } => {
            let clip = load_wav(&input)?;
            fuse(&clip)?.save_png(&output)
        }
        Command::Decode { input, output } => {
            let raster = load_png(&input)?;
            let clip = decode_waveform(raster.waveform_plane())?;
            save_wav(&clip, &output)
        }
        Command::Features { input, json } => {
            let clip = load_wav(&input)?;
            let fs = extract_voice_features(&clip, &AnalysisConfig::default())?;
            let value = fs.to_json();
            if json {
                println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            } else if let serde_json::Value::Object(map) = value {
                for (k, v) in map {
                    println!("{k}\t{v}");
                }
            }
            Ok(())
        }
        Command::Dataset { out, per_speaker } => {
            let m = generate_dataset(&default_profiles(), per_speaker, &out, seed)?;
            eprintln!("wrote {} images to {}", m.entries.len(), out.display());
            Ok(())
        }
        Command::Train {
            manifest,
            model,
            split,
            epochs,
            lr,
            augment,
        } => {
            let manifest = Manifest::load(&manifest)?;
            let data = subset(&manifest, split, seed, true)?;
            let cfg = TrainConfig {
                learning_rate: lr,
                epochs,
                seed,
                augment,
            };
            let trained = train(&data, &cfg)?;
            trained.save(&model)?;
            if let (Some(first), Some(last)) = (trained.loss_history.first(), trained.loss_history.last()) {
                eprintln!("trained on {} images, loss {first:.4} -> {last:.4}", data.len());
            }
            Ok(())
        }
        Command::Eval {
            manifest,
            model,
            report,
            split,
        } => {
            let manifest = Manifest::load(&manifest)?;
            let model = Model::load(&model)?;
            let data = if split == 0.0 {
                load_images(&manifest)?
            } else {
                subset(&manifest, split, seed, false)?
            };
            if data.is_empty() {
                return Err(Error::EmptyInput);
            }
            let metrics = evaluate(&model, &data)?;
            match report {
                Report::Json => println!("{}", metrics.to_json()),
                Report::Text => print!("{}", metrics.to_text()),
            }
            Ok(())
        }
    }
}
