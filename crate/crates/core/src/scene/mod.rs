//! Synthetic multi-channel scenes: a moving harmonic target, static
//! harmonic interferers and white noise at a small microphone array.
//!
//! Each channel's direct path is the target delayed (fractionally, following
//! the DOA) and scaled by a simple head-shadow gain. Interferers and noise go
//! through the same renderer and are then scaled per channel so the input
//! SNRs hit a drawn target with the requested inter-channel asymmetry.

mod doa;
mod source;

pub use doa::{cartesian_to_doa, doa_to_cartesian, interpolate_doa, DoaTrajectory, DOA_SPACING};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::MultiChannelWaveform;
use source::{fractional_delay, SpeechLike};

const SPEED_OF_SOUND: f64 = 343.0;

/// Activity labels are produced at 100 per second.
pub const ACTIVITY_RATE: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    #[default]
    Static,
    /// Azimuth moves linearly over the recording.
    LinearPan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub channels: usize,
    pub sample_rate: u32,
    /// Seconds.
    pub clip_len: f64,
    /// Range every channel's input SNR is drawn from, dB.
    pub target_snr_range: [f64; 2],
    /// Mean input SNR difference between the best and worst channel, dB.
    pub channel_asymmetry: f64,
    /// Half-width of the uniform jitter around `channel_asymmetry`, dB.
    pub gap_spread: f64,
    pub interferer_count: usize,
    /// White-noise power relative to the interferers (or absolute when there
    /// are none), dB; `None` disables noise.
    pub noise_level: Option<f64>,
    pub motion: Motion,
    /// Channel that always receives the higher SNR; random when `None`.
    pub louder_channel: Option<usize>,
    /// Microphones sit on a circle of this diameter, metres.
    pub mic_spacing: f64,
    pub head_shadow_db: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            channels: 2,
            sample_rate: 16000,
            clip_len: 3.0,
            target_snr_range: [-6.0, 6.0],
            channel_asymmetry: 6.0,
            gap_spread: 3.0,
            interferer_count: 2,
            noise_level: Some(-6.0),
            motion: Motion::LinearPan,
            louder_channel: None,
            mic_spacing: 0.15,
            head_shadow_db: 3.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    /// No interferers, no noise, no motion, no asymmetry.
    pub fn clean() -> Self {
        Self {
            channel_asymmetry: 0.0,
            gap_spread: 0.0,
            interferer_count: 0,
            noise_level: None,
            motion: Motion::Static,
            ..Self::default()
        }
    }

    fn has_residual(&self) -> bool {
        self.interferer_count > 0 || self.noise_level.is_some()
    }

    fn effective_spread(&self) -> f64 {
        self.gap_spread.min(self.channel_asymmetry)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::config("at least one channel is required"));
        }
        if self.sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if !(self.clip_len > 0.0 && self.clip_len.is_finite()) {
            return Err(Error::config(format!("clip length {} must be positive", self.clip_len)));
        }
        let [lo, hi] = self.target_snr_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config(format!("invalid SNR range [{lo}, {hi}]")));
        }
        if !(self.channel_asymmetry >= 0.0 && self.gap_spread >= 0.0) {
            return Err(Error::config("asymmetry and spread must be non-negative"));
        }
        if self.noise_level.is_some_and(|n| !n.is_finite()) {
            return Err(Error::config("noise level must be finite or null"));
        }
        if let Some(c) = self.louder_channel {
            if c >= self.channels {
                return Err(Error::config(format!("louder channel {c} out of range")));
            }
        }
        if !(self.mic_spacing >= 0.0) || self.mic_spacing / SPEED_OF_SOUND > 1e-3 {
            return Err(Error::config("microphone spacing must keep inter-channel delay within 1 ms"));
        }
        if self.has_residual() && self.channels > 1 {
            let widest = self.channel_asymmetry + self.effective_spread();
            if widest > hi - lo {
                return Err(Error::config(format!(
                    "SNR gap up to {widest} dB does not fit the range [{lo}, {hi}]"
                )));
            }
            if widest > crate::metrics::MAX_GAP_DB {
                return Err(Error::config(format!("SNR gap up to {widest} dB exceeds 12 dB")));
            }
        }
        Ok(())
    }

    pub fn clip_samples(&self) -> usize {
        (self.clip_len * self.sample_rate as f64).round() as usize
    }

    fn activity_hop(&self) -> usize {
        (self.sample_rate / ACTIVITY_RATE).max(1) as usize
    }

    fn mic_positions(&self) -> Vec<[f64; 3]> {
        let r = self.mic_spacing / 2.0;
        (0..self.channels)
            .map(|c| {
                let a = PI / 2.0 - 2.0 * PI * c as f64 / self.channels as f64;
                [r * a.cos(), r * a.sin(), 0.0]
            })
            .collect()
    }
}

/// One training/evaluation example, `mixture = refs + residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingClip {
    pub clip_id: String,
    pub mixture: MultiChannelWaveform,
    pub refs: MultiChannelWaveform,
    pub residual: MultiChannelWaveform,
    pub doa: DoaTrajectory,
    /// Target activity, one flag per `activity_hop` samples.
    pub activity: Vec<bool>,
    pub activity_hop: usize,
}

impl TrainingClip {
    /// Builds a clip from mixture and references; the residual is their
    /// difference and activity is all-true.
    pub fn from_parts(
        clip_id: impl Into<String>,
        mixture: MultiChannelWaveform,
        refs: MultiChannelWaveform,
        doa: DoaTrajectory,
    ) -> Result<Self> {
        if mixture.sample_rate() != refs.sample_rate() {
            return Err(Error::invalid("mixture and references have different sample rates"));
        }
        let residual = mixture.difference(&refs)?;
        doa.validate()?;
        let activity_hop = (mixture.sample_rate() / ACTIVITY_RATE).max(1) as usize;
        let activity = vec![true; mixture.len().div_ceil(activity_hop)];
        Ok(Self { clip_id: clip_id.into(), mixture, refs, residual, doa, activity, activity_hop })
    }

    pub fn channels(&self) -> usize {
        self.mixture.num_channels()
    }

    pub fn len(&self) -> usize {
        self.mixture.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mixture.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.mixture.sample_rate()
    }
}

fn render_at_array(
    signal: &[f64],
    direction_at: &dyn Fn(f64) -> [f64; 3],
    cfg: &SceneConfig,
) -> Vec<Vec<f64>> {
    let fs = cfg.sample_rate as f64;
    let mics = cfg.mic_positions();
    let dirs: Vec<[f64; 3]> = (0..signal.len()).map(|n| direction_at(n as f64 / fs)).collect();
    mics.iter()
        .map(|p| {
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let projection = |d: &[f64; 3]| p[0] * d[0] + p[1] * d[1] + p[2] * d[2];
            // A microphone closer to the source hears it earlier and louder.
            let delayed = fractional_delay(signal, |n| -projection(&dirs[n]) / SPEED_OF_SOUND * fs);
            delayed
                .iter()
                .zip(&dirs)
                .map(|(x, d)| {
                    let facing = if norm > 0.0 { projection(d) / norm } else { 0.0 };
                    x * 10f64.powf(cfg.head_shadow_db * facing / 20.0)
                })
                .collect()
        })
        .collect()
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Per-channel input SNR targets, dB.
fn draw_snrs(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let [lo, hi] = cfg.target_snr_range;
    let c = cfg.channels;
    let spread = cfg.effective_spread();
    let gap = if c > 1 { cfg.channel_asymmetry + rng.random_range(-1.0..=1.0) * spread } else { 0.0 };
    let centre = if hi - lo > gap { rng.random_range(lo + gap / 2.0..=hi - gap / 2.0) } else { (lo + hi) / 2.0 };
    let louder = cfg.louder_channel.unwrap_or_else(|| rng.random_range(0..c));
    let mut snrs = vec![centre - gap / 2.0; c];
    snrs[louder] = centre + gap / 2.0;
    if c > 2 {
        let quieter = (louder + 1 + rng.random_range(0..c - 1)) % c;
        for (ch, snr) in snrs.iter_mut().enumerate() {
            if ch != louder && ch != quieter {
                *snr = centre + rng.random_range(-0.5..=0.5) * gap;
            }
        }
    }
    snrs
}

/// Renders a recording of `duration` seconds. Deterministic in
/// `(cfg, index)`.
pub fn simulate_recording(cfg: &SceneConfig, index: u64, duration: f64) -> Result<TrainingClip> {
    cfg.validate()?;
    if !(duration > 0.0) {
        return Err(Error::config("duration must be positive"));
    }
    let fs = cfg.sample_rate;
    let len = (duration * fs as f64).round() as usize;
    if len < 2 {
        return Err(Error::config("recording shorter than two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);

    let target = SpeechLike::random(&mut rng);
    let az0 = rng.random_range(-PI..PI);
    let el = rng.random_range(-0.3..0.3);
    let sweep = match cfg.motion {
        Motion::Static => 0.0,
        Motion::LinearPan => rng.random_range(-PI / 2.0..PI / 2.0),
    };
    let doa = DoaTrajectory::sample(duration, |t| doa_to_cartesian(az0 + sweep * (t / duration).min(1.0), el));
    let target_at = |t: f64| doa_to_cartesian(az0 + sweep * (t / duration).min(1.0), el);
    let direct = render_at_array(&target.render(len, fs), &target_at, cfg);

    let mut residual = vec![vec![0.0; len]; cfg.channels];
    for _ in 0..cfg.interferer_count {
        let source = SpeechLike::random(&mut rng);
        let dir = doa_to_cartesian(rng.random_range(-PI..PI), rng.random_range(-0.3..0.3));
        let level = 10f64.powf(rng.random_range(-3.0..3.0) / 20.0);
        let rendered = render_at_array(&source.render(len, fs), &|_| dir, cfg);
        for (acc, ch) in residual.iter_mut().zip(rendered) {
            acc.iter_mut().zip(ch).for_each(|(a, x)| *a += level * x);
        }
    }
    if let Some(noise_db) = cfg.noise_level {
        let interferer_power = residual.iter().map(|ch| energy(ch)).sum::<f64>() / (cfg.channels * len) as f64;
        let base = if cfg.interferer_count > 0 { interferer_power } else { 1.0 };
        let sigma = (base * 10f64.powf(noise_db / 10.0)).sqrt();
        for ch in residual.iter_mut() {
            for v in ch.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * n;
            }
        }
    }

    if cfg.has_residual() {
        let snrs = draw_snrs(cfg, &mut rng);
        for ((res, x), snr) in residual.iter_mut().zip(&direct).zip(&snrs) {
            let (ex, ev) = (energy(x), energy(res));
            if ev > 0.0 {
                let k = (ex / ev / 10f64.powf(snr / 10.0)).sqrt();
                res.iter_mut().for_each(|v| *v *= k);
            }
        }
    }

    let peak = direct
        .iter()
        .zip(&residual)
        .flat_map(|(x, v)| x.iter().zip(v).map(|(a, b)| (a + b).abs()))
        .fold(0.0, f64::max);
    let gain = if peak > 0.0 { 0.5 / peak } else { 1.0 };

    // Keep mixture and references exactly representable in 32-bit float so
    // they survive WAV storage unchanged.
    let refs: Vec<Vec<f64>> = direct.iter().map(|ch| ch.iter().map(|v| (v * gain) as f32 as f64).collect()).collect();
    let mixture: Vec<Vec<f64>> = refs
        .iter()
        .zip(&residual)
        .map(|(x, v)| x.iter().zip(v).map(|(a, b)| (a + b * gain) as f32 as f64).collect())
        .collect();
    let mixture = MultiChannelWaveform::new(mixture, fs)?;
    let refs = MultiChannelWaveform::new(refs, fs)?;
    let residual = mixture.difference(&refs)?;
    let hop = cfg.activity_hop();
    Ok(TrainingClip {
        clip_id: format!("s{}_{:05}", cfg.seed, index),
        activity: target.activity(len, fs, hop),
        activity_hop: hop,
        mixture,
        refs,
        residual,
        doa,
    })
}

/// One clip of `cfg.clip_len` seconds.
pub fn simulate_clip(cfg: &SceneConfig, clip_index: u64) -> Result<TrainingClip> {
    simulate_recording(cfg, clip_index, cfg.clip_len)
}

/// Cuts a long recording into consecutive non-overlapping clips of
/// `clip_len` seconds, dropping the partial tail and clips without any
/// target activity.
pub fn segment_clips(recording: &TrainingClip, clip_len: f64) -> Vec<TrainingClip> {
    let fs = recording.sample_rate() as f64;
    let samples = (clip_len * fs).round() as usize;
    if samples == 0 {
        return Vec::new();
    }
    let hop = recording.activity_hop.max(1);
    (0..recording.len() / samples)
        .filter_map(|k| {
            let (start, end) = (k * samples, (k + 1) * samples);
            let flags = &recording.activity[(start / hop).min(recording.activity.len())..end.div_ceil(hop).min(recording.activity.len())];
            if !flags.iter().any(|&a| a) {
                return None;
            }
            let t0 = start as f64 / fs;
            let doa = DoaTrajectory::sample(clip_len, |t| {
                let d = interpolate_doa(&recording.doa, &[t0 + t]).expect("validated trajectory")[0];
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if n > 0.0 { d.map(|v| v / n) } else { d }
            });
            let a0 = start / hop;
            let activity = recording.activity[a0.min(recording.activity.len())..end.div_ceil(hop).min(recording.activity.len())].to_vec();
            Some(TrainingClip {
                clip_id: format!("{}_{k:03}", recording.clip_id),
                mixture: recording.mixture.slice(start, end),
                refs: recording.refs.slice(start, end),
                residual: recording.residual.slice(start, end),
                doa,
                activity,
                activity_hop: hop,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::si_sdr;

    fn short(cfg: SceneConfig) -> SceneConfig {
        SceneConfig { clip_len: 0.5, ..cfg }
    }

    #[test]
    fn decomposition_is_exact() {
        let clip = simulate_clip(&short(SceneConfig::default()), 3).unwrap();
        for c in 0..clip.channels() {
            for t in 0..clip.len() {
                let (y, x, v) = (clip.mixture.channel(c)[t], clip.refs.channel(c)[t], clip.residual.channel(c)[t]);
                assert_eq!(y - x - v, 0.0);
                assert_eq!(x + v, y);
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = short(SceneConfig { seed: 42, ..SceneConfig::default() });
        assert_eq!(simulate_clip(&cfg, 7).unwrap(), simulate_clip(&cfg, 7).unwrap());
        assert_ne!(simulate_clip(&cfg, 7).unwrap().mixture, simulate_clip(&cfg, 8).unwrap().mixture);
    }

    #[test]
    fn clean_scene_is_clean() {
        let clip = simulate_clip(&short(SceneConfig::clean()), 0).unwrap();
        assert_eq!(clip.mixture, clip.refs);
        for c in 0..2 {
            assert_eq!(si_sdr(clip.mixture.channel(c), clip.refs.channel(c)).unwrap(), 120.0);
        }
        let gap = crate::metrics::in_sdr_gap(&clip.mixture, &clip.refs, 0, 1).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn doa_unit_norm() {
        let clip = simulate_clip(&short(SceneConfig::default()), 1).unwrap();
        for d in &clip.doa.directions {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unsatisfiable_snr_is_config_error() {
        let cfg = SceneConfig { target_snr_range: [0.0, 2.0], channel_asymmetry: 6.0, ..SceneConfig::default() };
        assert!(matches!(simulate_clip(&cfg, 0), Err(Error::Config(_))));
        let cfg = SceneConfig { target_snr_range: [3.0, -3.0], ..SceneConfig::default() };
        assert!(simulate_clip(&cfg, 0).is_err());
        let cfg = SceneConfig { louder_channel: Some(2), ..SceneConfig::default() };
        assert!(simulate_clip(&cfg, 0).is_err());
    }

    #[test]
    fn inter_channel_delay_bounded() {
        let cfg = SceneConfig::default();
        let mics = cfg.mic_positions();
        let d: f64 = (0..3).map(|k| (mics[0][k] - mics[1][k]).powi(2)).sum::<f64>().sqrt();
        assert!(d / SPEED_OF_SOUND <= 1e-3);
        assert!((mics[0][1] - 0.075).abs() < 1e-12, "channel 0 is on the left (+y)");
    }

    fn long_recording(seconds: f64) -> TrainingClip {
        let cfg = SceneConfig { clip_len: seconds, sample_rate: 1000, interferer_count: 0, ..SceneConfig::clean() };
        let mut rec = simulate_clip(&cfg, 0).unwrap();
        rec.activity.fill(true);
        rec
    }

    #[test]
    fn segmentation_counts() {
        let rec = long_recording(60.0);
        assert_eq!(segment_clips(&rec, 3.0).len(), 20);

        let rec = long_recording(7.5);
        let clips = segment_clips(&rec, 3.0);
        assert_eq!(clips.len(), 2);
        assert_eq!(clips[1].len(), 3000);

        let mut rec = long_recording(10.0);
        let hop = rec.activity_hop;
        for (b, flag) in rec.activity.iter_mut().enumerate() {
            *flag = b * hop < 3000;
        }
        let clips = segment_clips(&rec, 3.0);
        assert_eq!(clips.len(), 1);
        assert_eq!(clips[0].mixture, rec.mixture.slice(0, 3000));
    }
}
