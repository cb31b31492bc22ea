//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use voximage::audio::AudioClip;
use voximage::classifier::{evaluate, loss_and_gradient, train, Metrics, TrainConfig};
use voximage::dataset::{default_profiles, generate_dataset, load_images, split_indices, Manifest, MANIFEST_FILE};
use voximage::dsp::{fft, AnalysisConfig};
use voximage::features::{extract_voice_features, spectral_flatness, zero_crossing_rate};
use voximage::fingerprint::{
    build_blue, build_red, cell_origin, flatten_features, FILL_VALUE, FLAT_LEN, GRID_COLS, GRID_ROWS, PATCH_ORDER,
    PATCH_SIDE,
};
use voximage::green::{decode_waveform, encode_waveform};
use voximage::rng::SplitMix64;

use common::{random_feature_set, sine, SR};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn codec_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xC0DEC);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let len = 1 + rng.below(261632) as usize;
        let rate = 8000 + rng.below(88000) as u32;
        let samples: Vec<f64> = (0..len).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let clip = AudioClip::new(samples, rate).map_err(|e| e.to_string())?;
        let img = encode_waveform(&clip, None).map_err(|e| e.to_string())?;
        let back = decode_waveform(&img).map_err(|e| e.to_string())?;
        check(back.len() == len && back.sample_rate() == rate, || {
            format!("clip {i}: length/rate {}/{} became {}/{}", len, rate, back.len(), back.sample_rate())
        })?;
        for (a, b) in clip.samples().iter().zip(back.samples()) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    check(worst <= 1.0 / 255.0, || format!("max error {worst:.3e} > 1/255"))?;
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("max error {worst:.3e} ≤ {:.3e}, {elapsed:.2?}", 1.0 / 255.0))
}

fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let a = -2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
                (re + v * a.cos(), im + v * a.sin())
            })
        })
        .collect()
}

fn dft_oracle() -> Outcome {
    let mut rng = SplitMix64::new(0xDF7);
    let sizes = [8usize, 16, 32, 64, 128, 256];
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = sizes[i % sizes.len()];
        let x: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let fast = fft(&x).map_err(|e| e.to_string())?;
        let slow = naive_dft(&x);
        let scale = slow.iter().map(|(re, im)| re.hypot(*im)).fold(0.0, f64::max);
        for (f, (re, im)) in fast.iter().zip(&slow) {
            worst = worst.max((f.re - re).hypot(f.im - im) / scale);
        }
        check(!fast.is_empty(), || "empty transform".into())?;
    }
    check(worst <= 1e-9, || format!("relative error {worst:.3e}"))?;
    Ok(format!("max relative error {worst:.3e} over 50 frames"))
}

fn feature_sanity() -> Outcome {
    let cfg = AnalysisConfig::default();
    let extract = |freq: f64, amp: f64| {
        let clip = AudioClip::new(sine(freq, SR, 2 * SR as usize, amp), SR).unwrap();
        extract_voice_features(&clip, &cfg).unwrap()
    };
    let a220 = extract(220.0, 0.5);
    check((a220.f0.median - 220.0).abs() <= 3.0, || format!("220 Hz f0 median {}", a220.f0.median))?;
    let k1 = extract(1000.0, 0.5);
    let bin = SR as f64 / cfg.frame_size as f64;
    check((k1.centroid.median - 1000.0).abs() <= bin, || {
        format!("1 kHz centroid median {}", k1.centroid.median)
    })?;
    check((a220.rms.median - 0.3536).abs() <= 1e-3, || format!("rms {}", a220.rms.median))?;
    let flat = spectral_flatness(&vec![0.7; cfg.bins()]);
    check((flat - 1.0).abs() <= 1e-9, || format!("flatness {flat}"))?;
    let alternating: Vec<f64> = (0..cfg.frame_size).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
    let zcr = zero_crossing_rate(&alternating);
    check(zcr == 1.0, || format!("zcr {zcr}"))?;
    let a440 = extract(440.0, 0.5);
    let chroma = &a440.chroma.median;
    let top = (0..chroma.len()).fold(0, |b, i| if chroma[i] > chroma[b] { i } else { b });
    check(top == 9, || format!("440 Hz chroma argmax {top}"))?;
    Ok(format!(
        "f0 {:.2} Hz, centroid {:.2} Hz, rms {:.5}, flatness {flat}, zcr {zcr}, chroma class {top}",
        a220.f0.median, k1.centroid.median, a220.rms.median
    ))
}

fn red_plane_structure() -> Outcome {
    for seed in 0..20 {
        let fs = random_feature_set(seed);
        let flat = flatten_features(&fs);
        let red = build_red(&flat);
        let px = red.pixels();
        check(px.iter().enumerate().all(|(i, &p)| p == px[i % FLAT_LEN]), || {
            format!("set {seed}: red plane not {FLAT_LEN}-periodic")
        })?;
        let v = flat.values();
        let (lo, hi) = (0..FLAT_LEN).fold((0, 0), |(lo, hi), i| {
            (if v[i] < v[lo] { i } else { lo }, if v[i] > v[hi] { i } else { hi })
        });
        check(px[lo] <= 1 && px[hi] >= 254, || {
            format!("set {seed}: min → {}, max → {}", px[lo], px[hi])
        })?;
    }
    Ok("20 feature sets: 78-periodic, min → 0, max → 255".into())
}

fn blue_plane_structure() -> Outcome {
    let half = PATCH_SIDE / 2;
    for seed in 0..20 {
        let fs = random_feature_set(seed);
        let blue = build_blue(&fs, SR);
        for (index, family) in PATCH_ORDER.iter().enumerate() {
            let (r0, c0) = cell_origin(index);
            let row = |r: usize| &blue.pixels()[(r0 + r) * blue.side() + c0..][..PATCH_SIDE];
            if family.is_vector() {
                // median rows on top, mean rows below
                for start in [0, half] {
                    let first = row(start);
                    for r in start..start + half {
                        check(row(r) == first, || format!("set {seed}: {family:?} rows differ within a half"))?;
                    }
                }
            } else {
                // median on the left, mean on the right
                let (left, right) = (row(0)[0], row(0)[half]);
                for r in 0..PATCH_SIDE {
                    let (l, rt) = row(r).split_at(half);
                    check(l.iter().all(|&p| p == left) && rt.iter().all(|&p| p == right), || {
                        format!("set {seed}: {family:?} half not constant")
                    })?;
                }
            }
        }
        for index in PATCH_ORDER.len()..GRID_ROWS * GRID_COLS {
            let (r0, c0) = cell_origin(index);
            for r in r0..r0 + PATCH_SIDE {
                check(blue.row(r)[c0..c0 + PATCH_SIDE].iter().all(|&p| p == FILL_VALUE), || {
                    format!("set {seed}: cell {index} not {FILL_VALUE}")
                })?;
            }
        }
    }
    Ok("20 feature sets: constant scalar halves, row-identical vector halves, 5 cells of 127".into())
}

fn classification() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = generate_dataset(&default_profiles(), 100, dir.path(), 2024).map_err(|e| e.to_string())?;
    let images = load_images(&manifest).map_err(|e| e.to_string())?;
    let labels: Vec<String> = images.iter().map(|i| i.label.clone()).collect();
    let (train_idx, test_idx) = split_indices(&labels, 0.9, 2024).map_err(|e| e.to_string())?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| images[i].clone()).collect::<Vec<_>>();
    let model = train(&pick(&train_idx), &TrainConfig::default()).map_err(|e| e.to_string())?;
    let metrics = evaluate(&model, &pick(&test_idx)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let table = Metrics::from_confusion(&["alto".into(), "bass".into()], vec![vec![48, 0], vec![2, 46]])
        .map_err(|e| e.to_string())?;
    let near = |a: f64, b: f64| (a - b).abs() <= 5e-5;
    check(
        near(table.accuracy, 0.9792)
            && near(table.classes[0].precision, 0.96)
            && near(table.classes[1].precision, 1.0)
            && near(table.classes[0].recall, 1.0)
            && (table.classes[1].recall - 0.96).abs() <= 5e-3,
        || format!("table arithmetic off: {}", table.to_text()),
    )?;
    check(metrics.accuracy >= 0.90, || {
        format!("test accuracy {:.4} < 0.90\n{}", metrics.accuracy, metrics.to_text())
    })?;
    check(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "test accuracy {:.4} on {} images ({} train), table accuracy {:.4}, {elapsed:.1?}",
        metrics.accuracy,
        test_idx.len(),
        train_idx.len(),
        table.accuracy
    ))
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    let h = 1e-5;
    for seed in 0..20 {
        let mut rng = SplitMix64::new(seed);
        let (k, d) = (2 + (seed % 3) as usize, 6);
        let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
        let ys: Vec<usize> = (0..5).map(|_| rng.below(k as u64) as usize).collect();
        let w: Vec<f64> = (0..k * d).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (_, grad) = loss_and_gradient(&w, &xs, &ys, k);
        for i in 0..w.len() {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (loss_and_gradient(&plus, &xs, &ys, k).0 - loss_and_gradient(&minus, &xs, &ys, k).0) / (2.0 * h);
            worst = worst.max((grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-4));
        }
    }
    check(worst <= 1e-4, || format!("relative error {worst:.3e}"))?;
    Ok(format!("max relative error {worst:.3e} over 20 instances"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_voximage"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Corpus files (manifest first), model bytes, metrics JSON.
type Artifacts = (Vec<Vec<u8>>, Vec<u8>, Vec<u8>);

fn pipeline(root: &Path) -> Result<Artifacts, String> {
    let data = root.join("data");
    let model = root.join("model.bin");
    let (data_s, model_s) = (data.to_str().unwrap(), model.to_str().unwrap());
    let manifest = data.join(MANIFEST_FILE);
    let manifest_s = manifest.to_str().unwrap();
    run_cli(&["dataset", "--out", data_s, "--per-speaker", "10", "--seed", "11"])?;
    run_cli(&["train", "--manifest", manifest_s, "--model", model_s, "--seed", "11", "--epochs", "50"])?;
    let metrics = run_cli(&["eval", "--manifest", manifest_s, "--model", model_s, "--report", "json", "--seed", "11"])?;
    let m = Manifest::load(&manifest).map_err(|e| e.to_string())?;
    let mut files = vec![std::fs::read(&manifest).map_err(|e| e.to_string())?];
    for e in &m.entries {
        files.push(std::fs::read(m.resolve(e)).map_err(|e| e.to_string())?);
    }
    Ok((files, std::fs::read(&model).map_err(|e| e.to_string())?, metrics))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (files_a, model_a, metrics_a) = pipeline(a.path())?;
    let (files_b, model_b, metrics_b) = pipeline(b.path())?;
    check(files_a == files_b, || "dataset bytes differ".into())?;
    check(model_a == model_b, || "model bytes differ".into())?;
    check(metrics_a == metrics_b, || "metrics JSON differs".into())?;
    Ok(format!(
        "{} PNGs + manifest, {}-byte model, {}-byte metrics identical across runs",
        files_a.len() - 1,
        model_a.len(),
        metrics_a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("codec round trip", codec_round_trip),
        ("FFT matches naive DFT", dft_oracle),
        ("feature sanity", feature_sanity),
        ("red plane structure", red_plane_structure),
        ("blue plane structure", blue_plane_structure),
        ("desk-scale classification", classification),
        ("gradient check", gradient_check),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {name}: {detail}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
