//! Baseline speaker classifier: multinomial logistic regression on
//! average-pooled fingerprints.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{random_augment, LabeledImage};
use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::rng::derive_seed;

/// Side of one pooling block.
pub const POOL: usize = 16;
/// Pooled values per plane at the 512 fingerprint side.
pub const POOLED_PER_PLANE: usize = (512 / POOL) * (512 / POOL);
/// Pooled planes plus a constant bias input.
pub const FEATURE_DIM: usize = 3 * POOLED_PER_PLANE + 1;

const MAGIC: &[u8; 8] = b"VOXLOGR1";

/// Average-pools each plane over 16×16 blocks, scales to [0, 1], and
/// appends a bias of 1. Planes are concatenated red, green, blue.
pub fn featurize(img: &RgbImage) -> Result<Vec<f64>> {
    let side = img.side();
    if !side.is_multiple_of(POOL) {
        return Err(Error::BadParameter(format!(
            "image side {side} is not a multiple of {POOL}"
        )));
    }
    let cells = side / POOL;
    let mut out = Vec::with_capacity(3 * cells * cells + 1);
    for plane in img.planes() {
        let px = plane.pixels();
        for by in 0..cells {
            for bx in 0..cells {
                let mut sum = 0u32;
                for y in by * POOL..(by + 1) * POOL {
                    sum += px[y * side + bx * POOL..y * side + (bx + 1) * POOL]
                        .iter()
                        .map(|&v| v as u32)
                        .sum::<u32>();
                }
                out.push(sum as f64 / (POOL * POOL) as f64 / 255.0);
            }
        }
    }
    out.push(1.0);
    Ok(out)
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Class probabilities for one input under row-major `weights`
/// (`classes × x.len()`).
pub fn probabilities(weights: &[f64], x: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = weights
        .chunks_exact(x.len())
        .map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect();
    softmax_in_place(&mut z);
    z
}

/// Mean cross-entropy and its gradient with respect to `weights`.
pub fn loss_and_gradient(weights: &[f64], xs: &[Vec<f64>], ys: &[usize], classes: usize) -> (f64, Vec<f64>) {
    let dim = xs.first().map_or(0, Vec::len);
    assert_eq!(weights.len(), classes * dim, "weight shape");
    let n = xs.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let p = probabilities(weights, x);
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        for (k, &pk) in p.iter().enumerate() {
            let coef = pk - if k == y { 1.0 } else { 0.0 };
            for (g, &xi) in grad[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                *g += coef * xi;
            }
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            seed: 0,
            augment: false,
        }
    }
}

/// One full-batch descent step with backtracking: the step size halves
/// until the update does not raise `loss`, and the reduced step carries
/// over to later epochs. Returns the loss before the update.
fn descend(w: &mut Vec<f64>, step: &mut f64, loss: impl Fn(&[f64]) -> (f64, Vec<f64>)) -> f64 {
    let (before, grad) = loss(w);
    let mut candidate = vec![0.0; w.len()];
    while *step > MIN_STEP {
        for ((c, wi), gi) in candidate.iter_mut().zip(w.iter()).zip(&grad) {
            *c = wi - *step * gi;
        }
        if loss(&candidate).0 <= before {
            std::mem::swap(w, &mut candidate);
            break;
        }
        *step /= 2.0;
    }
    before
}

const MIN_STEP: f64 = 1e-12;

/// Full-batch gradient descent from zero weights, starting at
/// `learning_rate`. Returns the weights and the loss before each update.
pub fn gradient_descent(
    xs: &[Vec<f64>],
    ys: &[usize],
    classes: usize,
    learning_rate: f64,
    epochs: usize,
) -> (Vec<f64>, Vec<f64>) {
    let dim = xs.first().map_or(0, Vec::len);
    let mut w = vec![0.0; classes * dim];
    let mut step = learning_rate;
    let history = (0..epochs)
        .map(|_| descend(&mut w, &mut step, |w| loss_and_gradient(w, xs, ys, classes)))
        .collect();
    (w, history)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub classes: Vec<String>,
    pub config: TrainConfig,
    pub dim: usize,
    /// Row-major `classes × dim`.
    pub weights: Vec<f64>,
    /// Training loss recorded before each epoch's update.
    pub loss_history: Vec<f64>,
}

fn check_dataset(data: &[LabeledImage]) -> Result<Vec<String>> {
    let mut classes: Vec<String> = data.iter().map(|d| d.label.clone()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateDataset);
    }
    for c in &classes {
        if data.iter().filter(|d| &d.label == c).count() < 2 {
            return Err(Error::DegenerateDataset);
        }
    }
    Ok(classes)
}

/// Trains on `data`. Class order is the sorted label set.
///
/// With `augment`, every epoch sees a fresh random transform of each image,
/// seeded by `(seed, epoch, index)`; each step still never raises the loss
/// on its own epoch's batch, but losses across epochs are not comparable.
pub fn train(data: &[LabeledImage], cfg: &TrainConfig) -> Result<Model> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::BadParameter(format!(
            "learning rate {} must be positive",
            cfg.learning_rate
        )));
    }
    let classes = check_dataset(data)?;
    let ys: Vec<usize> = data
        .iter()
        .map(|d| classes.binary_search(&d.label).expect("label from set"))
        .collect();

    let base: Vec<Vec<f64>> = data.par_iter().map(|d| featurize(&d.image)).collect::<Result<_>>()?;
    let dim = base[0].len();
    if base.iter().any(|x| x.len() != dim) {
        return Err(Error::BadParameter("images differ in size".into()));
    }

    let (weights, loss_history) = if cfg.augment {
        let mut w = vec![0.0; classes.len() * dim];
        let mut step = cfg.learning_rate;
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            let xs: Vec<Vec<f64>> = data
                .par_iter()
                .enumerate()
                .map(|(i, d)| {
                    let seed = derive_seed(cfg.seed, epoch as u64, i as u64);
                    featurize(&random_augment(&d.image, seed))
                })
                .collect::<Result<_>>()?;
            history.push(descend(&mut w, &mut step, |w| loss_and_gradient(w, &xs, &ys, classes.len())));
        }
        (w, history)
    } else {
        gradient_descent(&base, &ys, classes.len(), cfg.learning_rate, cfg.epochs)
    };

    Ok(Model {
        classes,
        config: *cfg,
        dim,
        weights,
        loss_history,
    })
}

impl Model {
    /// Predicted class index and probabilities. Ties go to the lower index.
    pub fn predict(&self, img: &RgbImage) -> Result<(usize, Vec<f64>)> {
        let x = featurize(img)?;
        if x.len() != self.dim {
            return Err(Error::BadModel(format!(
                "model expects {} inputs, image gives {}",
                self.dim,
                x.len()
            )));
        }
        let p = probabilities(&self.weights, &x);
        Ok((argmax(&p), p))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.weights.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        for c in &self.classes {
            out.extend_from_slice(&(c.len() as u32).to_le_bytes());
            out.extend_from_slice(c.as_bytes());
        }
        out.extend_from_slice(&self.config.learning_rate.to_le_bytes());
        out.extend_from_slice(&(self.config.epochs as u64).to_le_bytes());
        out.extend_from_slice(&self.config.seed.to_le_bytes());
        out.push(self.config.augment as u8);
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::BadModel("bad magic".into()));
        }
        let n_classes = r.u32()? as usize;
        if !(2..=1 << 16).contains(&n_classes) {
            return Err(Error::BadModel(format!("class count {n_classes}")));
        }
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::BadModel("class name is not UTF-8".into()))?;
            classes.push(name.to_string());
        }
        let learning_rate = f64::from_le_bytes(r.array()?);
        let epochs = r.u64()? as usize;
        let seed = r.u64()?;
        let augment = match r.take(1)?[0] {
            0 => false,
            1 => true,
            b => return Err(Error::BadModel(format!("augment flag {b}"))),
        };
        let dim = r.u64()? as usize;
        let count = n_classes
            .checked_mul(dim)
            .filter(|c| c.checked_mul(8) == Some(r.remaining()))
            .ok_or_else(|| Error::BadModel("weight block has the wrong size".into()))?;
        let weights = (0..count).map(|_| r.array().map(f64::from_le_bytes)).collect::<Result<_>>()?;
        Ok(Self {
            classes,
            config: TrainConfig {
                learning_rate,
                epochs,
                seed,
                augment,
            },
            dim,
            weights,
            loss_history: Vec::new(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::BadModel("truncated model file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Average {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub classes: Vec<ClassReport>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub macro_avg: Average,
    pub weighted_avg: Average,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_confusion(labels: &[String], confusion: Vec<Vec<usize>>) -> Result<Self> {
        let k = labels.len();
        if k == 0 || confusion.len() != k || confusion.iter().any(|r| r.len() != k) {
            return Err(Error::BadParameter("confusion matrix shape does not match labels".into()));
        }
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::EmptyInput);
        }
        let classes: Vec<ClassReport> = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let support: usize = confusion[c].iter().sum();
                let predicted: usize = confusion.iter().map(|r| r[c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassReport {
                    label: labels[c].clone(),
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        let avg = |weight: &dyn Fn(&ClassReport) -> f64, norm: f64| Average {
            precision: classes.iter().map(|c| weight(c) * c.precision).sum::<f64>() / norm,
            recall: classes.iter().map(|c| weight(c) * c.recall).sum::<f64>() / norm,
            f1: classes.iter().map(|c| weight(c) * c.f1).sum::<f64>() / norm,
            support: total,
        };
        let macro_avg = avg(&|_| 1.0, k as f64);
        let weighted_avg = avg(&|c| c.support as f64, total as f64);
        Ok(Self {
            classes,
            confusion,
            accuracy: correct as f64 / total as f64,
            macro_avg,
            weighted_avg,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// Plain-text table: one row per class, then accuracy, macro and
    /// weighted averages.
    pub fn to_text(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.label.len())
            .chain(["weighted avg".len()])
            .max()
            .unwrap_or(0);
        let mut s = format!(
            "{:>width$} {:>10} {:>10} {:>10} {:>10}\n\n",
            "", "precision", "recall", "f1-score", "support"
        );
        for c in &self.classes {
            s += &format!(
                "{:>width$} {:>10.2} {:>10.2} {:>10.2} {:>10}\n",
                c.label, c.precision, c.recall, c.f1, c.support
            );
        }
        let total = self.macro_avg.support;
        s += &format!("\n{:>width$} {:>10} {:>10} {:>10.2} {:>10}\n", "accuracy", "", "", self.accuracy, total);
        for (name, a) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            s += &format!(
                "{:>width$} {:>10.2} {:>10.2} {:>10.2} {:>10}\n",
                name, a.precision, a.recall, a.f1, a.support
            );
        }
        s
    }
}

/// Scores `model` on labelled images. Labels unknown to the model fail.
pub fn evaluate(model: &Model, data: &[LabeledImage]) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = model.classes.len();
    let pairs: Vec<(usize, usize)> = data
        .par_iter()
        .map(|d| {
            let truth = model
                .classes
                .iter()
                .position(|c| c == &d.label)
                .ok_or_else(|| Error::UnknownLabel(d.label.clone()))?;
            let (pred, _) = model.predict(&d.image)?;
            Ok((truth, pred))
        })
        .collect::<Result<_>>()?;
    let mut confusion = vec![vec![0usize; k]; k];
    for (t, p) in pairs {
        confusion[t][p] += 1;
    }
    Metrics::from_confusion(&model.classes, confusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GrayImage;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn flat_image(r: u8, g: u8, b: u8) -> RgbImage {
        let p = |v| GrayImage::filled(512, v).unwrap();
        RgbImage::merge(p(r), p(g), p(b)).unwrap()
    }

    fn labelled(img: RgbImage, label: &str) -> LabeledImage {
        LabeledImage {
            image: img,
            label: label.into(),
            source_seed: 0,
        }
    }

    #[test]
    fn featurize_layout() {
        let x = featurize(&flat_image(255, 0, 51)).unwrap();
        assert_eq!(x.len(), FEATURE_DIM);
        assert_eq!(FEATURE_DIM, 3073);
        assert!(x[..1024].iter().all(|&v| v == 1.0));
        assert!(x[1024..2048].iter().all(|&v| v == 0.0));
        assert!(x[2048..3072].iter().all(|&v| (v - 0.2).abs() < 1e-12));
        assert_eq!(x[3072], 1.0);
    }

    #[test]
    fn featurize_pools_blocks() {
        let mut img = flat_image(0, 0, 0);
        // one bright pixel in block (1, 2) of the red plane
        img.red.set(16, 32, 255);
        let x = featurize(&img).unwrap();
        assert!((x[32 + 2] - 1.0 / 256.0).abs() < 1e-15);
        assert_eq!(x.iter().take(3072).filter(|&&v| v > 0.0).count(), 1);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.2, 0.3, 0.1]), 1);
    }

    #[test]
    fn zero_weights_predict_first_class() {
        let p = probabilities(&[0.0; 6], &[1.0, 2.0, 3.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        assert_eq!(argmax(&p), 0);
    }

    pub(crate) fn relative_error(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
    }

    fn finite_difference(w: &[f64], xs: &[Vec<f64>], ys: &[usize], k: usize) -> Vec<f64> {
        let h = 1e-5;
        (0..w.len())
            .map(|i| {
                let mut plus = w.to_vec();
                let mut minus = w.to_vec();
                plus[i] += h;
                minus[i] -= h;
                (loss_and_gradient(&plus, xs, ys, k).0 - loss_and_gradient(&minus, xs, ys, k).0) / (2.0 * h)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let (k, d) = (3, 4);
            let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
            let ys: Vec<usize> = (0..5).map(|_| rng.below(k as u64) as usize).collect();
            let w: Vec<f64> = (0..k * d).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let (_, g) = loss_and_gradient(&w, &xs, &ys, k);
            for (a, b) in g.iter().zip(finite_difference(&w, &xs, &ys, k)) {
                prop_assert!(relative_error(*a, b) <= 1e-4, "{a} vs {b}");
            }
        }

        #[test]
        fn probabilities_sum_to_one(z in prop::collection::vec(-50.0f64..50.0, 6)) {
            let p = probabilities(&z, &[1.0, 0.5, -0.25]);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn raising_one_logit_row_raises_only_that_class(
            w in prop::collection::vec(-2.0f64..2.0, 6),
            class in 0usize..3,
            bump in 0.01f64..3.0,
        ) {
            // constant input 1 so adding `bump` to a row adds it to that logit
            let x = [1.0, 1.0];
            let before = probabilities(&w, &x);
            let mut w2 = w.clone();
            w2[class * 2] += bump;
            let after = probabilities(&w2, &x);
            for k in 0..3 {
                if k == class {
                    prop_assert!(after[k] > before[k]);
                } else {
                    prop_assert!(after[k] < before[k]);
                }
            }
        }
    }

    #[test]
    fn loss_never_increases_on_separable_data() {
        let mut rng = SplitMix64::new(7);
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let shift = if i % 2 == 0 { 0.3 } else { -0.3 };
                vec![rng.uniform(0.0, 1.0) + shift, rng.uniform(0.0, 1.0), 1.0]
            })
            .collect();
        let ys: Vec<usize> = (0..40).map(|i| i % 2).collect();
        for lr in [0.01, 0.1, 10.0] {
            let (_, history) = gradient_descent(&xs, &ys, 2, lr, 200);
            assert!((history[0] - 2f64.ln()).abs() < 1e-12);
            assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }
    }

    #[test]
    fn separates_flat_images() {
        let data: Vec<LabeledImage> = (0..6)
            .map(|i| {
                if i % 2 == 0 {
                    labelled(flat_image(200, 100 + i as u8, 20), "hi")
                } else {
                    labelled(flat_image(20, 100 + i as u8, 200), "lo")
                }
            })
            .collect();
        let model = train(&data, &TrainConfig { epochs: 30, ..Default::default() }).unwrap();
        assert_eq!(model.classes, vec!["hi".to_string(), "lo".to_string()]);
        let m = evaluate(&model, &data).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.confusion, vec![vec![3, 0], vec![0, 3]]);
    }

    #[test]
    fn zero_epochs_give_uniform_probabilities() {
        let data = vec![
            labelled(flat_image(1, 1, 1), "a"),
            labelled(flat_image(2, 2, 2), "a"),
            labelled(flat_image(3, 3, 3), "b"),
            labelled(flat_image(4, 4, 4), "b"),
        ];
        let model = train(&data, &TrainConfig { epochs: 0, ..Default::default() }).unwrap();
        let (label, p) = model.predict(&data[3].image).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        assert_eq!(label, 0);
    }

    #[test]
    fn constant_image_features() {
        let x = featurize(&flat_image(128, 128, 128)).unwrap();
        assert!(x[..3072].iter().all(|&v| v == 128.0 / 255.0));
    }

    #[test]
    fn degenerate_datasets_rejected() {
        let one_class = vec![labelled(flat_image(1, 1, 1), "a"), labelled(flat_image(2, 2, 2), "a")];
        assert!(matches!(train(&one_class, &TrainConfig::default()), Err(Error::DegenerateDataset)));
        let thin = vec![
            labelled(flat_image(1, 1, 1), "a"),
            labelled(flat_image(2, 2, 2), "a"),
            labelled(flat_image(3, 3, 3), "b"),
        ];
        assert!(matches!(train(&thin, &TrainConfig::default()), Err(Error::DegenerateDataset)));
    }

    #[test]
    fn model_bytes_round_trip() {
        let model = Model {
            classes: vec!["alto".into(), "bass".into()],
            config: TrainConfig {
                learning_rate: 0.05,
                epochs: 12,
                seed: 99,
                augment: true,
            },
            dim: 3,
            weights: vec![0.5, -1.25, 3.0, 1e-300, -0.0, 7.0],
            loss_history: Vec::new(),
        };
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(Model::from_bytes(&bytes).unwrap(), model);
        assert!(matches!(Model::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::BadModel(_))));
        assert!(matches!(Model::from_bytes(b"NOTMODEL"), Err(Error::BadModel(_))));
    }

    #[test]
    fn unknown_label_fails_evaluation() {
        let model = Model {
            classes: vec!["a".into(), "b".into()],
            config: TrainConfig::default(),
            dim: FEATURE_DIM,
            weights: vec![0.0; 2 * FEATURE_DIM],
            loss_history: Vec::new(),
        };
        let data = vec![labelled(flat_image(0, 0, 0), "c")];
        assert!(matches!(evaluate(&model, &data), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn report_arithmetic() {
        let labels = vec!["alto".to_string(), "bass".to_string()];
        let m = Metrics::from_confusion(&labels, vec![vec![48, 0], vec![2, 46]]).unwrap();
        assert!((m.classes[0].precision - 48.0 / 50.0).abs() < 1e-12);
        assert_eq!(m.classes[0].recall, 1.0);
        assert_eq!(m.classes[1].precision, 1.0);
        assert!((m.classes[1].recall - 46.0 / 48.0).abs() < 1e-12);
        assert!((m.accuracy - 94.0 / 96.0).abs() < 1e-12);
        let text = m.to_text();
        assert!(text.contains("0.96"), "{text}");
        assert!(text.contains("0.98"), "{text}");
        assert!(text.contains("weighted avg"));
        let json: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(json["confusion"][1][0], 2);
    }

    #[test]
    fn degenerate_predictor_report() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let m = Metrics::from_confusion(&labels, vec![vec![5, 0], vec![5, 0]]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.classes[1].recall, 0.0);
        let perfect = Metrics::from_confusion(&labels, vec![vec![4, 0], vec![0, 6]]).unwrap();
        assert_eq!(perfect.accuracy, 1.0);
        assert!(perfect.classes.iter().all(|c| c.f1 == 1.0));
        let w = &m.weighted_avg;
        let expect = (5.0 * m.classes[0].f1 + 5.0 * m.classes[1].f1) / 10.0;
        assert!((w.f1 - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_division_is_zero() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let m = Metrics::from_confusion(&labels, vec![vec![3, 0], vec![2, 0]]).unwrap();
        assert_eq!(m.classes[1].precision, 0.0);
        assert_eq!(m.classes[1].recall, 0.0);
        assert_eq!(m.classes[1].f1, 0.0);
        assert!(Metrics::from_confusion(&labels, vec![vec![0, 0], vec![0, 0]]).is_err());
        assert!(Metrics::from_confusion(&labels, vec![vec![1]]).is_err());
    }
}
