//! Training with a negative SI-SDR objective under a reference policy.
//!
//! One clip per step. The target channel is picked on every visit, before
//! the gradient is taken, and the gradient flows only through the enhanced
//! waveform.

mod adam;
mod enhance;
mod objective;
mod policy;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use enhance::{enhance, enhance_mixture, enhance_with_masks, loss_and_gradient, Enhancement, StepGradient};
pub use objective::{input_reference, loss, loss_with_grad, select_reference, target_channel, SelectionResult};
pub use policy::{Masking, MethodPolicy, ReferencePolicy};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{init_params, ModelParams, NetConfig, Precision};
use crate::scene::TrainingClip;
use crate::signal::StftConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
    /// Clips per update; only 1 is supported.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Overrides the precision in the network configuration.
    pub precision: Precision,
    pub stft: StftConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 45,
            lr: 1e-4,
            lr_decay: 0.99,
            batch_size: 1,
            adam: AdamConfig::default(),
            seed: 0,
            precision: Precision::F64,
            stft: StftConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config(format!("lr decay {} must lie in (0, 1]", self.lr_decay)));
        }
        if self.batch_size != 1 {
            return Err(Error::config("only a batch size of 1 is supported"));
        }
        self.adam.validate()?;
        self.stft.validate()
    }

    /// `lr · decay^epoch`, epochs counted from 0.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr * self.lr_decay.powi(epoch as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
}

/// The channel chosen for one clip on one visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub epoch: usize,
    pub step: u64,
    pub clip_id: String,
    pub channel: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub optimizer: AdamState,
    pub history: Vec<EpochStats>,
    pub selections: Vec<SelectionEntry>,
}

/// Trains a freshly initialised network.
pub fn train(
    dataset: &[TrainingClip],
    policy: MethodPolicy,
    net_cfg: NetConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let net_cfg = NetConfig { precision: train_cfg.precision, ..net_cfg };
    let mut params = init_params(&net_cfg, train_cfg.seed)?;
    params.round_to_precision();
    train_from(dataset, policy, params, None, train_cfg)
}

/// Continues training from `params`, optionally with existing optimizer
/// moments. Epoch numbering, and therefore the learning rate, restarts at 0.
pub fn train_from(
    dataset: &[TrainingClip],
    policy: MethodPolicy,
    mut params: ModelParams,
    optimizer: Option<AdamState>,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_cfg.validate()?;
    params.validate()?;
    let first = dataset.first().ok_or_else(|| Error::invalid("training set is empty"))?;
    let channels = first.channels();
    if let Some(bad) = dataset.iter().find(|c| c.channels() != channels) {
        return Err(Error::invalid(format!("clip {} has {} channels, expected {channels}", bad.clip_id, bad.channels())));
    }
    policy.validate(channels)?;

    let mut opt = optimizer.unwrap_or_else(|| AdamState::new(&params, train_cfg.adam));
    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(train_cfg.epochs);
    let mut selections = Vec::with_capacity(train_cfg.epochs * dataset.len());

    for epoch in 0..train_cfg.epochs {
        let lr = train_cfg.lr_at(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &idx in &order {
            let clip = &dataset[idx];
            if !params.is_finite() {
                return Err(Error::NonFiniteLoss { clip_id: clip.clip_id.clone(), epoch, loss: f64::NAN });
            }
            let step = loss_and_gradient(clip, &params, policy, &train_cfg.stft)?;
            if !step.loss.is_finite() || !step.grads.is_finite() {
                return Err(Error::NonFiniteLoss { clip_id: clip.clip_id.clone(), epoch, loss: step.loss });
            }
            opt.update(&mut params, &step.grads, lr);
            total += step.loss;
            selections.push(SelectionEntry {
                epoch,
                step: opt.step,
                clip_id: clip.clip_id.clone(),
                channel: step.channel,
                loss: step.loss,
            });
        }
        history.push(EpochStats { epoch, lr, mean_loss: total / dataset.len() as f64 });
    }
    Ok(TrainOutcome { params, optimizer: opt, history, selections })
}
