use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Window {
    /// Periodic Hann, `w[n] = 0.5 - 0.5 cos(2πn / N)`.
    #[default]
    Hann,
}

/// Framing parameters shared by analysis and synthesis.
///
/// Frame `i` covers samples `[i * hop, i * hop + fft_len)` of the signal after
/// `fft_len - hop` zeros have been prepended, and enough zeros appended that
/// every input sample lies under two full frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub fft_len: usize,
    pub hop: usize,
    pub window: Window,
    pub sample_rate: u32,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { fft_len: 512, hop: 256, window: Window::Hann, sample_rate: 16000 }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_len < 2 || !self.fft_len.is_power_of_two() {
            return Err(Error::invalid(format!("fft_len {} is not a power of two >= 2", self.fft_len)));
        }
        if self.hop == 0 || !self.fft_len.is_multiple_of(self.hop) || self.hop > self.fft_len / 2 {
            return Err(Error::invalid(format!(
                "hop {} must divide fft_len {} and be at most half of it",
                self.hop, self.fft_len
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(())
    }

    pub fn freq_bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    pub fn pad_front(&self) -> usize {
        self.fft_len - self.hop
    }

    /// `ceil((len + fft_len - hop) / hop)`.
    pub fn num_frames(&self, len: usize) -> usize {
        (len + self.pad_front()).div_ceil(self.hop)
    }

    /// Longest signal `istft` can produce from `frames` frames.
    pub fn max_output_len(&self, frames: usize) -> usize {
        frames * self.hop
    }

    /// Time in seconds of the centre of frame `i`, relative to sample 0.
    pub fn frame_center_time(&self, frame: usize) -> f64 {
        let centre = (frame * self.hop) as f64 + self.fft_len as f64 / 2.0 - self.pad_front() as f64;
        centre / self.sample_rate as f64
    }

    pub fn window_values(&self) -> Vec<f64> {
        match self.window {
            Window::Hann => (0..self.fft_len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / self.fft_len as f64).cos())
                .collect(),
        }
    }
}

/// One-sided complex spectrogram, `freq_bins × frames`, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    freq_bins: usize,
    frames: usize,
    values: Vec<Complex64>,
}

impl ComplexSpectrogram {
    pub fn zeros(freq_bins: usize, frames: usize) -> Self {
        Self { freq_bins, frames, values: vec![Complex64::new(0.0, 0.0); freq_bins * frames] }
    }

    /// Builds a spectrogram from frame-major values.
    pub fn from_values(freq_bins: usize, frames: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != freq_bins * frames {
            return Err(Error::invalid(format!(
                "{} values for a {freq_bins}x{frames} spectrogram",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("spectrogram contains non-finite values"));
        }
        Ok(Self { freq_bins, frames, values })
    }

    pub fn freq_bins(&self) -> usize {
        self.freq_bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.values[frame * self.freq_bins + bin]
    }

    pub fn set(&mut self, bin: usize, frame: usize, value: Complex64) {
        self.values[frame * self.freq_bins + bin] = value;
    }

    pub fn frame(&self, frame: usize) -> &[Complex64] {
        &self.values[frame * self.freq_bins..(frame + 1) * self.freq_bins]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.freq_bins == other.freq_bins && self.frames == other.frames
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            freq_bins: self.freq_bins,
            frames: self.frames,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `Σ |X(f, i)|²`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn planner_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Short-time Fourier transform of one channel.
pub fn stft(signal: &[f64], cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    cfg.validate()?;
    if signal.is_empty() {
        return Err(Error::invalid("cannot analyse an empty signal"));
    }
    let n = cfg.fft_len;
    let bins = cfg.freq_bins();
    let frames = cfg.num_frames(signal.len());
    let pad = cfg.pad_front();
    let window = cfg.window_values();
    let (fft, _) = planner_pair(n);

    let mut values = Vec::with_capacity(bins * frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for frame in 0..frames {
        let start = frame * cfg.hop;
        for (k, slot) in buf.iter_mut().enumerate() {
            let sample = (start + k)
                .checked_sub(pad)
                .and_then(|t| signal.get(t))
                .copied()
                .unwrap_or(0.0);
            *slot = Complex64::new(window[k] * sample, 0.0);
        }
        fft.process(&mut buf);
        values.extend_from_slice(&buf[..bins]);
    }
    Ok(ComplexSpectrogram { freq_bins: bins, frames, values })
}

/// Per-output-sample synthesis weight `1 / Σ w²`, zero where no window covers.
fn synthesis_weights(cfg: &StftConfig, window: &[f64], frames: usize) -> Vec<f64> {
    let total = (frames - 1) * cfg.hop + cfg.fft_len;
    let mut wsum = vec![0.0; total];
    for frame in 0..frames {
        let start = frame * cfg.hop;
        for (k, w) in window.iter().enumerate() {
            wsum[start + k] += w * w;
        }
    }
    wsum.iter().map(|&s| if s > 1e-12 { 1.0 / s } else { 0.0 }).collect()
}

fn check_synthesis(spec: &ComplexSpectrogram, cfg: &StftConfig, out_len: usize) -> Result<()> {
    cfg.validate()?;
    if spec.freq_bins != cfg.freq_bins() {
        return Err(Error::invalid(format!(
            "spectrogram has {} bins, config expects {}",
            spec.freq_bins,
            cfg.freq_bins()
        )));
    }
    if spec.frames == 0 {
        return Err(Error::invalid("spectrogram has no frames"));
    }
    if out_len > cfg.max_output_len(spec.frames) {
        return Err(Error::invalid(format!(
            "{out_len} samples requested, at most {} reconstructable from {} frames",
            cfg.max_output_len(spec.frames),
            spec.frames
        )));
    }
    Ok(())
}

/// Weighted overlap-add inverse of [`stft`], truncated to `out_len` samples.
pub fn istft(spec: &ComplexSpectrogram, cfg: &StftConfig, out_len: usize) -> Result<Vec<f64>> {
    check_synthesis(spec, cfg, out_len)?;
    let n = cfg.fft_len;
    let bins = spec.freq_bins;
    let pad = cfg.pad_front();
    let window = cfg.window_values();
    let weights = synthesis_weights(cfg, &window, spec.frames);
    let (_, ifft) = planner_pair(n);
    let scale = 1.0 / n as f64;

    let mut acc = vec![0.0; weights.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for frame in 0..spec.frames {
        let half = spec.frame(frame);
        buf[..bins].copy_from_slice(half);
        for k in 1..n - bins + 1 {
            buf[n - k] = half[k].conj();
        }
        ifft.process(&mut buf);
        let start = frame * cfg.hop;
        for k in 0..n {
            acc[start + k] += window[k] * buf[k].re * scale;
        }
    }
    Ok((0..out_len).map(|t| acc[t + pad] * weights[t + pad]).collect())
}

/// Adjoint of [`istft`] as a real-linear map: for any spectrogram `X` and
/// signal gradient `g`, `<istft(X), g> = Σ Re X·Re D + Im X·Im D` with
/// `D = istft_adjoint(g)`. Gives `∂L/∂Re X + j ∂L/∂Im X` from `∂L/∂x`.
pub fn istft_adjoint(grad: &[f64], cfg: &StftConfig, frames: usize) -> Result<ComplexSpectrogram> {
    cfg.validate()?;
    if frames == 0 || grad.len() > cfg.max_output_len(frames) {
        return Err(Error::invalid(format!(
            "gradient of {} samples does not fit {frames} frames",
            grad.len()
        )));
    }
    let n = cfg.fft_len;
    let bins = cfg.freq_bins();
    let pad = cfg.pad_front();
    let window = cfg.window_values();
    let weights = synthesis_weights(cfg, &window, frames);
    let (fft, _) = planner_pair(n);

    let mut padded = vec![0.0; weights.len()];
    for (t, g) in grad.iter().enumerate() {
        padded[t + pad] = g * weights[t + pad];
    }
    let mut values = Vec::with_capacity(bins * frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for frame in 0..frames {
        let start = frame * cfg.hop;
        for k in 0..n {
            buf[k] = Complex64::new(window[k] * padded[start + k], 0.0);
        }
        fft.process(&mut buf);
        for (k, v) in buf[..bins].iter().enumerate() {
            // Interior bins appear twice in the Hermitian spectrum.
            if k == 0 || k == n / 2 {
                values.push(Complex64::new(v.re / n as f64, 0.0));
            } else {
                values.push(v * (2.0 / n as f64));
            }
        }
    }
    Ok(ComplexSpectrogram { freq_bins: bins, frames, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Direct O(N²) DFT of one padded, windowed frame.
    fn dft_frame(signal: &[f64], cfg: &StftConfig, frame: usize) -> Vec<Complex64> {
        let n = cfg.fft_len;
        let w = cfg.window_values();
        (0..cfg.freq_bins())
            .map(|f| {
                (0..n)
                    .map(|k| {
                        let p = frame * cfg.hop + k;
                        let x = p.checked_sub(cfg.pad_front()).and_then(|t| signal.get(t)).copied().unwrap_or(0.0);
                        let ang = -2.0 * PI * (f * k) as f64 / n as f64;
                        Complex64::new(ang.cos(), ang.sin()) * (w[k] * x)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn zero_signal_frame_count() {
        let cfg = StftConfig::default();
        let spec = stft(&vec![0.0; 16000], &cfg).unwrap();
        assert_eq!(spec.frames(), (16000 + 512 - 256usize).div_ceil(256));
        assert_eq!(spec.frames(), 64);
        assert_eq!(spec.freq_bins(), 257);
        assert!(spec.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn impulse_matches_windowed_dft() {
        let cfg = StftConfig::default();
        let mut x = vec![0.0; 4000];
        x[0] = 1.0;
        let spec = stft(&x, &cfg).unwrap();
        let pad = cfg.pad_front();
        let w = cfg.window_values();
        for f in 0..cfg.freq_bins() {
            let ang = -2.0 * PI * (f * pad) as f64 / cfg.fft_len as f64;
            let expected = Complex64::new(ang.cos(), ang.sin()) * w[pad];
            assert!((spec.get(f, 0) - expected).norm() < 1e-12, "bin {f}");
        }
    }

    #[test]
    fn matches_direct_dft_on_random_frames() {
        let cfg = StftConfig { fft_len: 64, hop: 32, ..Default::default() };
        let x = random_signal(300, 3);
        let spec = stft(&x, &cfg).unwrap();
        for frame in [0, 3, spec.frames() - 1] {
            let oracle = dft_frame(&x, &cfg, frame);
            for (f, o) in oracle.iter().enumerate() {
                assert!((spec.get(f, frame) - o).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn bin_centred_sinusoid_concentrates_energy() {
        let cfg = StftConfig::default();
        let k = 20usize;
        let freq = k as f64 * cfg.sample_rate as f64 / cfg.fft_len as f64;
        let x: Vec<f64> = (0..48000)
            .map(|t| (2.0 * PI * freq * t as f64 / cfg.sample_rate as f64).sin())
            .collect();
        let spec = stft(&x, &cfg).unwrap();
        let (mut near, mut total) = (0.0, 0.0);
        for frame in 2..spec.frames() - 2 {
            for (f, v) in spec.frame(frame).iter().enumerate() {
                total += v.norm_sqr();
                if f + 1 >= k && f <= k + 1 {
                    near += v.norm_sqr();
                }
            }
        }
        assert!(near / total >= 0.99, "ratio {}", near / total);
    }

    #[test]
    fn round_trip_3s() {
        let cfg = StftConfig::default();
        let x = random_signal(48000, 11);
        let y = istft(&stft(&x, &cfg).unwrap(), &cfg, x.len()).unwrap();
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6 * 1.0, "max error {err}");
    }

    #[test]
    fn zero_spectrogram_gives_silence() {
        let cfg = StftConfig::default();
        let spec = ComplexSpectrogram::zeros(cfg.freq_bins(), 10);
        assert!(istft(&spec, &cfg, 2000).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scaled_spectrogram_scales_output() {
        let cfg = StftConfig::default();
        let x = random_signal(48000, 5);
        let y = istft(&stft(&x, &cfg).unwrap().scaled(2.0), &cfg, x.len()).unwrap();
        let err = x.iter().zip(&y).map(|(a, b)| (2.0 * a - b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-6);
    }

    #[test]
    fn errors() {
        let cfg = StftConfig::default();
        assert!(matches!(stft(&[], &cfg), Err(Error::InvalidInput(_))));
        let spec = ComplexSpectrogram::zeros(cfg.freq_bins(), 4);
        assert!(istft(&spec, &cfg, 4 * 256 + 1).is_err());
        assert!(istft(&spec, &cfg, 4 * 256).is_ok());
        let bad = StftConfig { fft_len: 500, ..cfg };
        assert!(bad.validate().is_err());
        let bad = StftConfig { hop: 300, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn adjoint_identity() {
        let cfg = StftConfig { fft_len: 64, hop: 32, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let frames = 12;
        let len = cfg.max_output_len(frames) - 7;
        let values = (0..cfg.freq_bins() * frames)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let spec = ComplexSpectrogram::from_values(cfg.freq_bins(), frames, values).unwrap();
        let g = random_signal(len, 10);
        let lhs: f64 = istft(&spec, &cfg, len).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum();
        let adj = istft_adjoint(&g, &cfg, frames).unwrap();
        let rhs: f64 = spec.values().iter().zip(adj.values()).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn perfect_reconstruction(seed in any::<u64>(), len in 512usize..3000, amp in 1e-3f64..1e3) {
            let cfg = StftConfig::default();
            let x: Vec<f64> = random_signal(len, seed).iter().map(|v| v * amp).collect();
            let y = istft(&stft(&x, &cfg).unwrap(), &cfg, len).unwrap();
            let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-6 * (1.0 + peak));
        }

        #[test]
        fn linearity(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let cfg = StftConfig { fft_len: 128, hop: 64, ..Default::default() };
            let x = random_signal(700, seed);
            let y = random_signal(700, seed.wrapping_add(1));
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let (sx, sy, sm) = (stft(&x, &cfg).unwrap(), stft(&y, &cfg).unwrap(), stft(&mix, &cfg).unwrap());
            let scale = sm.values().iter().fold(1e-300f64, |m, v| m.max(v.norm()));
            for ((u, v), w) in sx.values().iter().zip(sy.values()).zip(sm.values()) {
                prop_assert!((u * a + v * b - w).norm() <= 1e-9 * scale);
            }
        }
    }
}
