use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{GradientSet, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| (0.0..1.0).contains(&b);
        if !unit(self.beta1) || !unit(self.beta2) || !(self.eps > 0.0) {
            return Err(Error::config("Adam needs 0 <= beta < 1 and eps > 0"));
        }
        Ok(())
    }
}

/// One bias-corrected Adam step on flat slices. `step` is the 1-based
/// index of this update.
pub fn adam_step(w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], step: u64, lr: f64, cfg: &AdamConfig) {
    let c1 = 1.0 - cfg.beta1.powi(step as i32);
    let c2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..w.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        w[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// Moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    /// Updates applied so far.
    pub step: u64,
    pub m: ModelParams,
    pub v: ModelParams,
}

impl AdamState {
    pub fn new(params: &ModelParams, config: AdamConfig) -> Self {
        let zeros = ModelParams::zeros(params.config);
        Self { config, step: 0, m: zeros.clone(), v: zeros }
    }

    /// Applies one update, then rounds the parameters to their storage
    /// precision.
    pub fn update(&mut self, params: &mut ModelParams, grads: &GradientSet, lr: f64) {
        self.step += 1;
        let step = self.step;
        let cfg = self.config;
        let tensors = params.tensors_mut().into_iter().zip(grads.tensors()).zip(self.m.tensors_mut()).zip(self.v.tensors_mut());
        for ((((_, w), (_, g)), (_, m)), (_, v)) in tensors {
            adam_step(&mut w.data, &g.data, &mut m.data, &mut v.data, step, lr, &cfg);
        }
        params.round_to_precision();
    }
}
