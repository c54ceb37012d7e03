//! Bucketed evaluation, masked-channel energy and reference-selection
//! statistics over a dataset.
//!
//! Clips are processed in parallel; every report lists clips in dataset
//! order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bucket_of, in_sdrs, sdr_proj, si_sdr, ClipRecord, MetricsReport, DEFAULT_FILTER_LEN};
use crate::net::ModelParams;
use crate::scene::TrainingClip;
use crate::signal::StftConfig;
use crate::train::{enhance, select_reference, target_channel, Masking, MethodPolicy, ReferencePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub stft: StftConfig,
    /// FIR length allowed by the projection SDR.
    pub sdr_filter_len: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { stft: StftConfig::default(), sdr_filter_len: DEFAULT_FILTER_LEN }
    }
}

/// Spread of the unprocessed per-channel SDRs: 0 for one channel, the
/// absolute difference for two, max minus min beyond that.
pub fn channel_gap(in_sdr: &[f64]) -> f64 {
    let max = in_sdr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = in_sdr.iter().copied().fold(f64::INFINITY, f64::min);
    if in_sdr.len() < 2 {
        0.0
    } else {
        max - min
    }
}

/// Scores `estimate` for `clip` against the clean reference of `channel`.
pub fn score_estimate(clip: &TrainingClip, estimate: &[f64], channel: usize, cfg: &EvalConfig) -> Result<ClipRecord> {
    if channel >= clip.channels() {
        return Err(Error::invalid(format!("channel {channel} out of range for clip {}", clip.clip_id)));
    }
    let in_si_sdr = clip
        .mixture
        .channels()
        .iter()
        .zip(clip.refs.channels())
        .map(|(y, x)| si_sdr(y, x))
        .collect::<Result<Vec<_>>>()?;
    let in_sdr = in_sdrs(&clip.mixture, &clip.refs, cfg.sdr_filter_len)?;
    let in_sdr_gap = channel_gap(&in_sdr);
    let reference = clip.refs.channel(channel);
    Ok(ClipRecord {
        clip_id: clip.clip_id.clone(),
        bucket: bucket_of(in_sdr_gap).ok(),
        in_si_sdr,
        in_sdr,
        in_sdr_gap,
        selected_channel: channel,
        out_si_sdr: si_sdr(estimate, reference)?,
        out_sdr: sdr_proj(estimate, reference, cfg.sdr_filter_len)?,
    })
}

fn check_dataset(dataset: &[TrainingClip]) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    Ok(())
}

fn evaluate_with(
    dataset: &[TrainingClip],
    params: &ModelParams,
    policy: MethodPolicy,
    cfg: &EvalConfig,
    choose: impl Fn(&TrainingClip, &[f64]) -> Result<usize> + Sync,
) -> Result<Vec<ClipRecord>> {
    check_dataset(dataset)?;
    dataset
        .par_iter()
        .map(|clip| {
            let out = enhance(clip, params, policy, &cfg.stft)?;
            let channel = choose(clip, &out.waveform)?;
            score_estimate(clip, &out.waveform, channel, cfg)
        })
        .collect()
}

/// Scores each clip against the channel the policy targets: the fixed
/// channel, or the one selected by the auto rule.
pub fn evaluate(dataset: &[TrainingClip], params: &ModelParams, policy: MethodPolicy, cfg: &EvalConfig) -> Result<MetricsReport> {
    let records = evaluate_with(dataset, params, policy, cfg, |clip, est| target_channel(est, clip, policy))?;
    Ok(MetricsReport::new(policy.name(), policy.uses_oracle_reference(), records))
}

/// As [`evaluate`], but each clip is scored against whichever clean
/// channel gives the highest output SI-SDR.
pub fn evaluate_best_reference(
    dataset: &[TrainingClip],
    params: &ModelParams,
    policy: MethodPolicy,
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    if matches!(policy.reference, ReferencePolicy::AutoOut | ReferencePolicy::AutoIn) {
        return Err(Error::config(format!("{policy} already selects its reference")));
    }
    let records = evaluate_with(dataset, params, policy, cfg, |clip, est| Ok(select_reference(est, &clip.refs)?.channel))?;
    Ok(MetricsReport::new(format!("{}+best-ref", policy.name()), true, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEnergy {
    pub clip_id: String,
    /// `Σ |M_c · Y_c|²` per input channel.
    pub energies: Vec<f64>,
}

impl ClipEnergy {
    pub fn most_energetic(&self) -> usize {
        (0..self.energies.len()).fold(0, |b, c| if self.energies[c] > self.energies[b] { c } else { b })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAnalysis {
    /// Dataset sums of per-clip energies ranked from most to least
    /// energetic within each clip.
    pub rank_totals: Vec<f64>,
    /// `rank_totals` over their sum.
    pub proportions: Vec<f64>,
    pub clips: Vec<ClipEnergy>,
}

impl EnergyAnalysis {
    pub fn most_energetic_total(&self) -> f64 {
        self.rank_totals[0]
    }

    pub fn least_energetic_total(&self) -> f64 {
        *self.rank_totals.last().unwrap()
    }
}

/// Energy of each masked channel for multi-channel-masking parameters.
pub fn energy_analysis(dataset: &[TrainingClip], params: &ModelParams, cfg: &EvalConfig) -> Result<EnergyAnalysis> {
    check_dataset(dataset)?;
    let channels = params.config.channels_in;
    if params.config.output_channels != channels {
        return Err(Error::config("energy analysis needs one mask per channel"));
    }
    // The reference rule does not change the masks unless it reorders inputs.
    let policy = MethodPolicy::new(Masking::Mm, ReferencePolicy::AutoOut);
    let clips = dataset
        .par_iter()
        .map(|clip| {
            let out = enhance(clip, params, policy, &cfg.stft)?;
            let mut energies = vec![0.0; channels];
            for (pos, spec) in out.masked.iter().enumerate() {
                energies[out.channel_order[pos]] = spec.energy();
            }
            Ok(ClipEnergy { clip_id: clip.clip_id.clone(), energies })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rank_totals = vec![0.0; channels];
    for c in &clips {
        let mut sorted = c.energies.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        rank_totals.iter_mut().zip(&sorted).for_each(|(t, e)| *t += e);
    }
    let total: f64 = rank_totals.iter().sum();
    let proportions = rank_totals.iter().map(|t| if total > 0.0 { t / total } else { 0.0 }).collect();
    Ok(EnergyAnalysis { rank_totals, proportions, clips })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
    /// `(clip_id, channel)` in dataset order.
    pub selections: Vec<(String, usize)>,
}

/// How often each channel is chosen by an auto-reference policy.
pub fn selection_stats(
    dataset: &[TrainingClip],
    params: &ModelParams,
    policy: MethodPolicy,
    cfg: &EvalConfig,
) -> Result<SelectionStats> {
    check_dataset(dataset)?;
    if !matches!(policy.reference, ReferencePolicy::AutoOut | ReferencePolicy::AutoIn) {
        return Err(Error::config(format!("{policy} does not select its reference")));
    }
    let selections = dataset
        .par_iter()
        .map(|clip| {
            let out = enhance(clip, params, policy, &cfg.stft)?;
            Ok((clip.clip_id.clone(), target_channel(&out.waveform, clip, policy)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0; params.config.channels_in];
    for (_, c) in &selections {
        counts[*c] += 1;
    }
    let fractions = counts.iter().map(|&n| n as f64 / selections.len() as f64).collect();
    Ok(SelectionStats { counts, fractions, selections })
}
