use std::ops::{Deref, DerefMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetConfig, Precision};
use crate::error::{Error, Result};

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// `y = W x + b`, `W` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Affine {
    fn zeros(outputs: usize, inputs: usize) -> Self {
        Self { weight: Tensor::zeros(&[outputs, inputs]), bias: Tensor::zeros(&[outputs]) }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape[0]
    }

    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.inputs();
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weight.data[r * n..(r + 1) * n];
            *o = self.bias.data[r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// LSTM weights with gate blocks ordered input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H × D`
    pub w_ih: Tensor,
    /// `4H × H`
    pub w_hh: Tensor,
    /// `4H`
    pub bias: Tensor,
}

impl LstmParams {
    fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w_ih: Tensor::zeros(&[4 * hidden, inputs]),
            w_hh: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w_ih.shape[1]
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.shape[1]
    }
}

/// Every learnable tensor of the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: NetConfig,
    pub doa_encoder: Affine,
    pub f_forward: LstmParams,
    pub f_backward: LstmParams,
    pub t_layer: LstmParams,
    pub head: Affine,
}

impl ModelParams {
    pub fn zeros(config: NetConfig) -> Self {
        let (fh, th) = (config.f_hidden, config.t_hidden);
        Self {
            config,
            doa_encoder: Affine::zeros(fh, 3),
            f_forward: LstmParams::zeros(config.input_width(), fh),
            f_backward: LstmParams::zeros(config.input_width(), fh),
            t_layer: LstmParams::zeros(2 * fh, th),
            head: Affine::zeros(2 * config.output_channels, th),
        }
    }

    /// Tensors in their canonical order with stable names.
    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("doa_encoder.weight", &self.doa_encoder.weight),
            ("doa_encoder.bias", &self.doa_encoder.bias),
            ("f_forward.w_ih", &self.f_forward.w_ih),
            ("f_forward.w_hh", &self.f_forward.w_hh),
            ("f_forward.bias", &self.f_forward.bias),
            ("f_backward.w_ih", &self.f_backward.w_ih),
            ("f_backward.w_hh", &self.f_backward.w_hh),
            ("f_backward.bias", &self.f_backward.bias),
            ("t_layer.w_ih", &self.t_layer.w_ih),
            ("t_layer.w_hh", &self.t_layer.w_hh),
            ("t_layer.bias", &self.t_layer.bias),
            ("head.weight", &self.head.weight),
            ("head.bias", &self.head.bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("doa_encoder.weight", &mut self.doa_encoder.weight),
            ("doa_encoder.bias", &mut self.doa_encoder.bias),
            ("f_forward.w_ih", &mut self.f_forward.w_ih),
            ("f_forward.w_hh", &mut self.f_forward.w_hh),
            ("f_forward.bias", &mut self.f_forward.bias),
            ("f_backward.w_ih", &mut self.f_backward.w_ih),
            ("f_backward.w_hh", &mut self.f_backward.w_hh),
            ("f_backward.bias", &mut self.f_backward.bias),
            ("t_layer.w_ih", &mut self.t_layer.w_ih),
            ("t_layer.w_hh", &mut self.t_layer.w_hh),
            ("t_layer.bias", &mut self.t_layer.bias),
            ("head.weight", &mut self.head.weight),
            ("head.bias", &mut self.head.bias),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }

    /// Rounds every value to the configured storage precision.
    pub fn round_to_precision(&mut self) {
        if self.config.precision == Precision::F32 {
            for (_, t) in self.tensors_mut() {
                t.data.iter_mut().for_each(|v| *v = *v as f32 as f64);
            }
        }
    }

    /// Checks every tensor against the shapes implied by `config`.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let expected = Self::zeros(self.config);
        for ((name, t), (_, e)) in self.tensors().iter().zip(expected.tensors().iter()) {
            if t.shape != e.shape || t.data.len() != e.data.len() {
                return Err(Error::invalid(format!("tensor {name} has shape {:?}, expected {:?}", t.shape, e.shape)));
            }
        }
        if !self.is_finite() {
            return Err(Error::invalid("parameters contain non-finite values"));
        }
        Ok(())
    }
}

/// Gradients, one tensor per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub ModelParams);

impl GradientSet {
    pub fn zeros(config: NetConfig) -> Self {
        Self(ModelParams::zeros(config))
    }

    pub(crate) fn add_assign(&mut self, other: &GradientSet) {
        for ((_, a), (_, b)) in self.0.tensors_mut().into_iter().zip(other.0.tensors().iter()) {
            a.data.iter_mut().zip(&b.data).for_each(|(x, y)| *x += y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.tensors().iter().flat_map(|(_, t)| t.data.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for GradientSet {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.0
    }
}

impl DerefMut for GradientSet {
    fn deref_mut(&mut self) -> &mut ModelParams {
        &mut self.0
    }
}

fn fill_uniform(t: &mut Tensor, fan_in: usize, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    t.data.iter_mut().for_each(|v| *v = rng.random_range(-bound..=bound));
}

fn init_lstm(p: &mut LstmParams, rng: &mut ChaCha8Rng) {
    let (inputs, hidden) = (p.inputs(), p.hidden());
    fill_uniform(&mut p.w_ih, inputs, rng);
    fill_uniform(&mut p.w_hh, hidden, rng);
    p.bias.data[hidden..2 * hidden].fill(1.0);
}

/// Uniform `±1/√fan_in` weights, zero biases, forget-gate biases at 1.
pub fn init_params(config: &NetConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ModelParams::zeros(*config);
    fill_uniform(&mut p.doa_encoder.weight, 3, &mut rng);
    init_lstm(&mut p.f_forward, &mut rng);
    init_lstm(&mut p.f_backward, &mut rng);
    init_lstm(&mut p.t_layer, &mut rng);
    fill_uniform(&mut p.head.weight, config.t_hidden, &mut rng);
    p.round_to_precision();
    Ok(p)
}
