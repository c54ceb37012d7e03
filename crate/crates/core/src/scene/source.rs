use std::f64::consts::PI;

use rand::Rng;

const HARMONICS: usize = 8;
const BAND_LO: f64 = 100.0;
const BAND_HI: f64 = 4000.0;

/// Half-width of the windowed-sinc interpolator; 32 taps in total.
const SINC_HALF: i64 = 16;

/// A harmonic complex under a slow amplitude envelope.
#[derive(Debug, Clone)]
pub(crate) struct SpeechLike {
    f0: f64,
    amplitudes: [f64; HARMONICS],
    phases: [f64; HARMONICS],
    mod_freq: f64,
    mod_phase: f64,
}

impl SpeechLike {
    pub fn random(rng: &mut impl Rng) -> Self {
        let f0 = rng.random_range(100.0..250.0);
        let amplitudes = std::array::from_fn(|k| rng.random_range(0.5..1.0) / (k + 1) as f64);
        let phases = std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI));
        Self { f0, amplitudes, phases, mod_freq: rng.random_range(2.0..8.0), mod_phase: rng.random_range(0.0..2.0 * PI) }
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let s = 0.5 + 0.5 * (2.0 * PI * self.mod_freq * t + self.mod_phase).sin();
        s * s
    }

    pub fn render(&self, len: usize, sample_rate: u32) -> Vec<f64> {
        let fs = sample_rate as f64;
        let top = BAND_HI.min(0.45 * fs);
        let partials: Vec<(f64, f64, f64)> = (0..HARMONICS)
            .map(|k| ((k + 1) as f64 * self.f0, self.amplitudes[k], self.phases[k]))
            .filter(|&(f, _, _)| (BAND_LO..=top).contains(&f))
            .collect();
        (0..len)
            .map(|n| {
                let t = n as f64 / fs;
                let tone: f64 = partials.iter().map(|&(f, a, p)| a * (2.0 * PI * f * t + p).sin()).sum();
                self.envelope(t) * tone
            })
            .collect()
    }

    /// One flag per `hop` samples: mean envelope at least 10% of its maximum.
    pub fn activity(&self, len: usize, sample_rate: u32, hop: usize) -> Vec<bool> {
        let fs = sample_rate as f64;
        (0..len.div_ceil(hop))
            .map(|b| {
                let (start, end) = (b * hop, ((b + 1) * hop).min(len));
                let mean = (start..end).map(|n| self.envelope(n as f64 / fs)).sum::<f64>() / (end - start) as f64;
                mean >= 0.1
            })
            .collect()
    }
}

fn sinc_tap(x: f64, sin_pi_frac: f64, k: i64) -> f64 {
    if x.abs() < 1e-12 {
        return 1.0;
    }
    // sin(π(frac − k)) = (−1)^k sin(π frac)
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let window = 0.5 * (1.0 + (PI * x / SINC_HALF as f64).cos());
    sign * sin_pi_frac / (PI * x) * window
}

/// Reads `signal` at the fractional positions `n - delay(n)` with a 32-tap
/// Hann-windowed sinc kernel. Samples outside the signal are zero.
pub(crate) fn fractional_delay(signal: &[f64], mut delay: impl FnMut(usize) -> f64) -> Vec<f64> {
    let len = signal.len() as i64;
    (0..signal.len())
        .map(|n| {
            let pos = n as f64 - delay(n);
            let base = pos.floor();
            let frac = pos - base;
            let base = base as i64;
            let sin_pi_frac = (PI * frac).sin();
            let mut acc = 0.0;
            for k in (-SINC_HALF + 1)..=SINC_HALF {
                let idx = base + k;
                if idx < 0 || idx >= len {
                    continue;
                }
                acc += signal[idx as usize] * sinc_tap(frac - k as f64, sin_pi_frac, k);
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn integer_delay_is_a_shift() {
        let x: Vec<f64> = (0..100).map(|n| (n as f64 * 0.37).sin()).collect();
        let y = fractional_delay(&x, |_| 3.0);
        for n in 3..100 {
            assert!((y[n] - x[n - 3]).abs() < 1e-12);
        }
    }

    #[test]
    fn half_sample_delay_of_slow_sine() {
        let f = 0.01;
        let x: Vec<f64> = (0..400).map(|n| (2.0 * PI * f * n as f64).sin()).collect();
        let y = fractional_delay(&x, |_| 0.5);
        for n in 50..350 {
            let truth = (2.0 * PI * f * (n as f64 - 0.5)).sin();
            assert!((y[n] - truth).abs() < 1e-3, "n={n}");
        }
    }

    #[test]
    fn source_is_band_limited_and_deterministic() {
        let a = SpeechLike::random(&mut ChaCha8Rng::seed_from_u64(1)).render(1600, 16000);
        let b = SpeechLike::random(&mut ChaCha8Rng::seed_from_u64(1)).render(1600, 16000);
        assert_eq!(a, b);
        let s = SpeechLike::random(&mut ChaCha8Rng::seed_from_u64(2));
        assert!(s.f0 >= 100.0 && s.f0 < 250.0);
        assert!((2.0..8.0).contains(&s.mod_freq));
    }
}
