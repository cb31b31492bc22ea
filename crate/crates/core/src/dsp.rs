//! Numerical kernels shared by the feature extractors: one-sided FFT,
//! STFT and its overlap-add inverse, autocorrelation, median filtering,
//! linear resampling, and median/mean aggregation.

use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Framing parameters shared by every spectral feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub frame_size: usize,
    pub hop: usize,
    /// Floor applied before logarithms and divisions.
    pub epsilon: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frame_size: 2048,
            hop: 512,
            epsilon: 1e-10,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.frame_size.is_power_of_two() || self.frame_size < 2 {
            return Err(Error::BadLength(self.frame_size));
        }
        if self.hop == 0 || self.hop > self.frame_size {
            return Err(Error::BadParameter(format!(
                "hop {} must lie in 1..={}",
                self.hop, self.frame_size
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::BadParameter("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Number of one-sided frequency bins.
    pub fn bins(&self) -> usize {
        self.frame_size / 2 + 1
    }

    /// Number of full frames that fit in `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_size {
            0
        } else {
            (len - self.frame_size) / self.hop + 1
        }
    }
}

/// Centre frequency in Hz of one-sided bin `k`.
pub fn bin_frequency(k: usize, sample_rate: u32, frame_size: usize) -> f64 {
    k as f64 * sample_rate as f64 / frame_size as f64
}

/// Periodic Hann window, `w[n] = 0.5 − 0.5·cos(2πn/N)`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// A reusable forward/inverse FFT pair for one power-of-two size.
pub struct RealFft {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RealFft {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return Err(Error::BadLength(size));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// One-sided spectrum (`size/2 + 1` bins) of a real frame.
    pub fn forward(&self, frame: &[f64]) -> Result<Vec<Complex64>> {
        if frame.len() != self.size {
            return Err(Error::BadLength(frame.len()));
        }
        let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.truncate(self.size / 2 + 1);
        Ok(buf)
    }

    /// Real signal whose one-sided spectrum is `half`. The imaginary parts
    /// of the DC and Nyquist bins are ignored.
    pub fn inverse(&self, half: &[Complex64]) -> Result<Vec<f64>> {
        if half.len() != self.size / 2 + 1 {
            return Err(Error::ConfigMismatch);
        }
        let n = self.size;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..half.len()].copy_from_slice(half);
        buf[0].im = 0.0;
        if n > 1 {
            buf[n / 2].im = 0.0;
        }
        for k in 1..n / 2 {
            buf[n - k] = half[k].conj();
        }
        self.inverse.process(&mut buf);
        Ok(buf.iter().map(|c| c.re / n as f64).collect())
    }
}

/// One-sided DFT of a power-of-two-length frame; bin 0 is the sample sum.
pub fn fft(frame: &[f64]) -> Result<Vec<Complex64>> {
    RealFft::new(frame.len())?.forward(frame)
}

/// Complex short-time spectrum: rows are frames, columns are bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub bins: Array2<Complex64>,
    pub frame_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.bins.nrows()
    }

    pub fn bin_count(&self) -> usize {
        self.bins.ncols()
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        bin_frequency(k, self.sample_rate, self.frame_size)
    }

    pub fn magnitudes(&self) -> Array2<f64> {
        self.bins.mapv(|c| c.norm())
    }

    pub fn power(&self) -> Array2<f64> {
        self.bins.mapv(|c| c.norm_sqr())
    }

    /// Element-wise product with a real mask of the same shape.
    pub fn masked(&self, mask: &Array2<f64>) -> Result<Spectrogram> {
        if mask.dim() != self.bins.dim() {
            return Err(Error::ConfigMismatch);
        }
        let mut out = self.clone();
        out.bins.zip_mut_with(mask, |c, &m| *c *= m);
        Ok(out)
    }
}

/// Hann-windowed STFT over full frames only; the trailing partial frame
/// is dropped.
pub fn stft(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let x = clip.samples();
    let frames = cfg.frame_count(x.len());
    if frames == 0 {
        return Err(Error::TooShort {
            len: x.len(),
            frame_size: cfg.frame_size,
        });
    }
    let fft = RealFft::new(cfg.frame_size)?;
    let window = hann(cfg.frame_size);
    let mut bins = Array2::zeros((frames, cfg.bins()));
    let mut buf = vec![0.0; cfg.frame_size];
    for (t, mut row) in bins.axis_iter_mut(Axis(0)).enumerate() {
        let start = t * cfg.hop;
        for ((b, &s), &w) in buf.iter_mut().zip(&x[start..]).zip(&window) {
            *b = s * w;
        }
        for (dst, src) in row.iter_mut().zip(fft.forward(&buf)?) {
            *dst = src;
        }
    }
    Ok(Spectrogram {
        bins,
        frame_size: cfg.frame_size,
        hop: cfg.hop,
        sample_rate: clip.sample_rate(),
    })
}

/// Overlap-add inverse of [`stft`] with Hann synthesis window and
/// squared-window normalisation.
///
/// Output length is `(frames − 1)·hop + frame_size`. Samples where the
/// summed squared window vanishes are zero.
pub fn istft(spec: &Spectrogram, cfg: &AnalysisConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if spec.frame_size != cfg.frame_size || spec.hop != cfg.hop || spec.bin_count() != cfg.bins()
    {
        return Err(Error::ConfigMismatch);
    }
    let frames = spec.frames();
    if frames == 0 {
        return Ok(Vec::new());
    }
    let len = (frames - 1) * cfg.hop + cfg.frame_size;
    let fft = RealFft::new(cfg.frame_size)?;
    let window = hann(cfg.frame_size);
    let mut out = vec![0.0; len];
    let mut norm = vec![0.0; len];
    let mut half = Vec::with_capacity(cfg.bins());
    for (t, row) in spec.bins.axis_iter(Axis(0)).enumerate() {
        half.clear();
        half.extend(row.iter().copied());
        let frame = fft.inverse(&half)?;
        let start = t * cfg.hop;
        for (i, (&v, &w)) in frame.iter().zip(&window).enumerate() {
            out[start + i] += v * w;
            norm[start + i] += w * w;
        }
    }
    for (y, n) in out.iter_mut().zip(&norm) {
        *y = if *n > 1e-10 { *y / n } else { 0.0 };
    }
    Ok(out)
}

/// Overlap-add window energy `Σ_t w²[n − t·hop]` for `frames` frames, the
/// normaliser [`istft`] divides by.
pub fn window_sum_square(frames: usize, cfg: &AnalysisConfig) -> Vec<f64> {
    if frames == 0 {
        return Vec::new();
    }
    let window = hann(cfg.frame_size);
    let mut norm = vec![0.0; (frames - 1) * cfg.hop + cfg.frame_size];
    for t in 0..frames {
        for (n, w) in norm[t * cfg.hop..].iter_mut().zip(&window) {
            *n += w * w;
        }
    }
    norm
}

/// `r[τ] = Σ_n x[n]·x[n+τ]` for every lag `0..len`, computed through a
/// zero-padded FFT.
pub fn autocorrelation(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    if n == 0 {
        return Vec::new();
    }
    let size = (2 * n).next_power_of_two();
    let fft = RealFft::new(size).expect("power of two");
    let mut padded = vec![0.0; size];
    padded[..n].copy_from_slice(frame);
    let spectrum: Vec<Complex64> = fft
        .forward(&padded)
        .expect("sized")
        .into_iter()
        .map(|c| Complex64::new(c.norm_sqr(), 0.0))
        .collect();
    let mut r = fft.inverse(&spectrum).expect("sized");
    r.truncate(n);
    if frame.iter().all(|&x| x == 0.0) {
        r.fill(0.0);
    }
    r
}

/// Direction along which [`median_filter_2d`] slides its window.
/// Rows of a spectrogram matrix are time frames, columns are bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterAxis {
    Time,
    Frequency,
}

/// Sliding median of odd length `kernel` along one axis, replicating edge
/// values past the borders.
pub fn median_filter_2d(m: &Array2<f64>, axis: FilterAxis, kernel: usize) -> Result<Array2<f64>> {
    if kernel < 3 || kernel.is_multiple_of(2) {
        return Err(Error::BadKernel(kernel));
    }
    let ax = match axis {
        FilterAxis::Time => Axis(0),
        FilterAxis::Frequency => Axis(1),
    };
    let mut out = Array2::zeros(m.dim());
    let mut window = vec![0.0; kernel];
    for (src, dst) in m.lanes(ax).into_iter().zip(out.lanes_mut(ax)) {
        median_lane(src, dst, kernel, &mut window);
    }
    Ok(out)
}

fn median_lane(src: ArrayView1<f64>, mut dst: ArrayViewMut1<f64>, kernel: usize, window: &mut [f64]) {
    let n = src.len() as isize;
    let half = (kernel / 2) as isize;
    for i in 0..n {
        for (j, w) in window.iter_mut().enumerate() {
            let idx = (i + j as isize - half).clamp(0, n - 1);
            *w = src[idx as usize];
        }
        window.sort_unstable_by(f64::total_cmp);
        dst[i as usize] = window[kernel / 2];
    }
}

/// Endpoint-preserving linear interpolation of `v` onto `target` points.
/// A single-element input is broadcast.
pub fn lin_resample(v: &[f64], target: usize) -> Vec<f64> {
    if v.is_empty() || target == 0 {
        return Vec::new();
    }
    if v.len() == 1 {
        return vec![v[0]; target];
    }
    if target == 1 {
        return vec![v[0]];
    }
    if target == v.len() {
        return v.to_vec();
    }
    let scale = (v.len() - 1) as f64 / (target - 1) as f64;
    (0..target)
        .map(|i| {
            let pos = i as f64 * scale;
            let lo = (pos.floor() as usize).min(v.len() - 2);
            let frac = pos - lo as f64;
            v[lo] + (v[lo + 1] - v[lo]) * frac
        })
        .collect()
}

/// Median (mean of the two middle values for even lengths) and mean.
pub fn median_and_mean(v: &[f64]) -> Result<(f64, f64)> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Ok((median, mean))
}
