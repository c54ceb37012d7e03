//! Frequency-then-time recurrent mask estimator.
//!
//! Per frame, a bidirectional LSTM runs across frequency bins, its forward
//! and backward hidden states both initialised from an affine encoding of
//! the frame's DOA. A causal LSTM then runs across frames at every bin with
//! parameters shared over bins. An affine head with `tanh` emits `(Re, Im)`
//! for one or `C` complex masks.

mod lstm;
mod model;
mod params;

pub use model::{backward, forward, infer, ForwardCache};
pub use params::{init_params, Affine, GradientSet, LstmParams, ModelParams, Tensor};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Parameters are kept at single-precision values; arithmetic stays f64.
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub channels_in: usize,
    pub freq_bins: usize,
    pub f_hidden: usize,
    pub t_hidden: usize,
    /// 1 for single-channel masking, `channels_in` for multi-channel.
    pub output_channels: usize,
    pub precision: Precision,
}

impl NetConfig {
    /// Desk-scale defaults: 32 units in both recurrent layers.
    pub fn new(channels_in: usize, freq_bins: usize, output_channels: usize) -> Self {
        Self { channels_in, freq_bins, f_hidden: 32, t_hidden: 32, output_channels, precision: Precision::F64 }
    }

    pub fn with_hidden(mut self, f_hidden: usize, t_hidden: usize) -> Self {
        self.f_hidden = f_hidden;
        self.t_hidden = t_hidden;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels_in == 0 || self.freq_bins == 0 || self.f_hidden == 0 || self.t_hidden == 0 {
            return Err(Error::config("network dimensions must be at least 1"));
        }
        if self.output_channels != 1 && self.output_channels != self.channels_in {
            return Err(Error::config(format!(
                "output channels must be 1 or {}, got {}",
                self.channels_in, self.output_channels
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        2 * self.channels_in
    }
}
