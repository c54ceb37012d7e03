use super::objective::{input_reference, loss_with_grad};
use super::policy::{Masking, MethodPolicy, ReferencePolicy};
use crate::error::{Error, Result};
use crate::net::{self, ForwardCache, GradientSet, ModelParams};
use crate::scene::{interpolate_doa, DoaTrajectory, TrainingClip};
use crate::signal::{
    apply_masks, apply_masks_adjoint, istft, istft_adjoint, stack_features, stft, ComplexMaskSet, ComplexSpectrogram,
    FeatureTensor, MultiChannelWaveform, StftConfig,
};

/// Output of one enhancement pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Enhancement {
    pub waveform: Vec<f64>,
    pub masks: ComplexMaskSet,
    /// `M_k · Y` for each mask, in network-input order.
    pub masked: Vec<ComplexSpectrogram>,
    /// Original channel index at each network-input position.
    pub channel_order: Vec<usize>,
    /// Original index of the channel a single mask was applied to.
    pub designated: Option<usize>,
}

/// Spectra and conditioning for one mixture, arranged for the network.
struct Prepared {
    specs: Vec<ComplexSpectrogram>,
    features: FeatureTensor,
    doa: Vec<[f64; 3]>,
    order: Vec<usize>,
    /// Position in `specs` of the single-mask channel.
    sm_position: Option<usize>,
    len: usize,
}

impl Prepared {
    fn new(
        mixture: &MultiChannelWaveform,
        doa: Option<&DoaTrajectory>,
        policy: MethodPolicy,
        oracle_channel: Option<usize>,
        cfg: &StftConfig,
    ) -> Result<Self> {
        let channels = mixture.num_channels();
        policy.validate(channels)?;
        if mixture.sample_rate() != cfg.sample_rate {
            return Err(Error::config(format!(
                "mixture at {} Hz but STFT configured for {} Hz",
                mixture.sample_rate(),
                cfg.sample_rate
            )));
        }
        let mut order: Vec<usize> = (0..channels).collect();
        let sm_position = match policy.reference {
            ReferencePolicy::OracleInputFixed => {
                let first = oracle_channel.ok_or_else(|| Error::config("oracle-input policy needs the clean references"))?;
                if first >= channels {
                    return Err(Error::config(format!("oracle channel {first} out of range")));
                }
                order.remove(first);
                order.insert(0, first);
                Some(0)
            }
            ReferencePolicy::Fixed(c) => Some(c),
            _ => None,
        }
        .filter(|_| policy.masking == Masking::Sm);

        let specs = order.iter().map(|&c| stft(mixture.channel(c), cfg)).collect::<Result<Vec<_>>>()?;
        let features = stack_features(&specs)?;
        let frames = features.frames;
        let doa = match doa {
            Some(traj) => {
                let times: Vec<f64> = (0..frames).map(|i| cfg.frame_center_time(i)).collect();
                interpolate_doa(traj, &times)?
            }
            None => Vec::new(),
        };
        Ok(Self { specs, features, doa, order, sm_position, len: mixture.len() })
    }

    fn masked_inputs(&self) -> &[ComplexSpectrogram] {
        match self.sm_position {
            Some(p) => &self.specs[p..=p],
            None => &self.specs,
        }
    }

    fn synthesize(&self, masks: ComplexMaskSet, cfg: &StftConfig) -> Result<Enhancement> {
        let inputs = self.masked_inputs();
        if masks.channels() != inputs.len() {
            return Err(Error::config(format!("{} masks for {} masked channels", masks.channels(), inputs.len())));
        }
        let combined = apply_masks(inputs, &masks)?;
        let waveform = istft(&combined, cfg, self.len)?;
        let masked = inputs
            .iter()
            .zip(masks.masks())
            .map(|(y, m)| {
                let v = y.values().iter().zip(m.values()).map(|(a, b)| a * b).collect();
                ComplexSpectrogram::from_values(y.freq_bins(), y.frames(), v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Enhancement {
            waveform,
            masks,
            masked,
            designated: self.sm_position.map(|p| self.order[p]),
            channel_order: self.order.clone(),
        })
    }
}

fn check_params(params: &ModelParams, channels: usize, policy: MethodPolicy, cfg: &StftConfig) -> Result<()> {
    let nc = &params.config;
    if nc.channels_in != channels {
        return Err(Error::config(format!("network expects {} channels, mixture has {channels}", nc.channels_in)));
    }
    if nc.output_channels != policy.output_channels(channels) {
        return Err(Error::config(format!(
            "method {policy} needs {} output masks, network has {}",
            policy.output_channels(channels),
            nc.output_channels
        )));
    }
    if nc.freq_bins != cfg.freq_bins() {
        return Err(Error::config(format!("network has {} bins, STFT gives {}", nc.freq_bins, cfg.freq_bins())));
    }
    Ok(())
}

fn oracle_for(clip: &TrainingClip, policy: MethodPolicy) -> Result<Option<usize>> {
    match policy.reference {
        ReferencePolicy::OracleInputFixed => Ok(Some(input_reference(clip)?.channel)),
        _ => Ok(None),
    }
}

/// Runs the network on `mixture` and synthesises the single-channel output.
///
/// `oracle_channel` is required by [`ReferencePolicy::OracleInputFixed`]
/// and ignored otherwise.
pub fn enhance_mixture(
    mixture: &MultiChannelWaveform,
    doa: &DoaTrajectory,
    params: &ModelParams,
    policy: MethodPolicy,
    oracle_channel: Option<usize>,
    cfg: &StftConfig,
) -> Result<Enhancement> {
    check_params(params, mixture.num_channels(), policy, cfg)?;
    let prep = Prepared::new(mixture, Some(doa), policy, oracle_channel, cfg)?;
    let masks = net::infer(&prep.features, &prep.doa, params)?;
    prep.synthesize(masks, cfg)
}

pub fn enhance(clip: &TrainingClip, params: &ModelParams, policy: MethodPolicy, cfg: &StftConfig) -> Result<Enhancement> {
    enhance_mixture(&clip.mixture, &clip.doa, params, policy, oracle_for(clip, policy)?, cfg)
}

/// The enhancement path with `masks` substituted for the network output.
/// Masks are in network-input order, so under an oracle-input policy mask
/// 0 belongs to the oracle channel.
pub fn enhance_with_masks(
    mixture: &MultiChannelWaveform,
    masks: ComplexMaskSet,
    policy: MethodPolicy,
    oracle_channel: Option<usize>,
    cfg: &StftConfig,
) -> Result<Enhancement> {
    let prep = Prepared::new(mixture, None, policy, oracle_channel, cfg)?;
    prep.synthesize(masks, cfg)
}

/// Loss, selected channel and parameter gradient for one clip.
#[derive(Debug, Clone)]
pub struct StepGradient {
    pub loss: f64,
    pub channel: usize,
    pub grads: GradientSet,
}

/// Forward pass, policy loss and backpropagation through synthesis,
/// masking and the network.
pub fn loss_and_gradient(
    clip: &TrainingClip,
    params: &ModelParams,
    policy: MethodPolicy,
    cfg: &StftConfig,
) -> Result<StepGradient> {
    check_params(params, clip.channels(), policy, cfg)?;
    let prep = Prepared::new(&clip.mixture, Some(&clip.doa), policy, oracle_for(clip, policy)?, cfg)?;
    let (masks, cache): (ComplexMaskSet, ForwardCache) = net::forward(&prep.features, &prep.doa, params)?;
    let out = prep.synthesize(masks, cfg)?;
    let (loss, channel, d_wave) = loss_with_grad(&out.waveform, clip, policy)?;
    let d_spec = istft_adjoint(&d_wave, cfg, prep.features.frames)?;
    let d_masks = apply_masks_adjoint(prep.masked_inputs(), &d_spec)?;
    let (grads, _) = net::backward(&cache, params, &d_masks)?;
    Ok(StepGradient { loss, channel, grads })
}
