use std::ops::Range;

use rayon::prelude::*;

use super::lstm::{self, Trace};
use super::params::{GradientSet, ModelParams};
use crate::error::{Error, Result};
use crate::signal::{Complex64, ComplexMaskSet, ComplexSpectrogram, FeatureTensor};

/// Work is split into fixed-size chunks and partial gradients are summed in
/// chunk order, so results do not depend on the thread count.
const CHUNK: usize = 8;

fn chunked<T: Send>(n: usize, f: impl Fn(Range<usize>) -> T + Sync + Send) -> Vec<T> {
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}

/// Everything [`backward`] needs from a [`forward`] call.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    features: FeatureTensor,
    doa: Vec<[f64; 3]>,
    freq_forward: Vec<Trace>,
    freq_backward: Vec<Trace>,
    /// Time-layer inputs per bin, `frames × 2·f_hidden`.
    time_inputs: Vec<Vec<f64>>,
    time: Vec<Trace>,
    /// `tanh` head outputs, `bins × frames × 2·output_channels`.
    head_out: Vec<f64>,
}

impl ForwardCache {
    pub fn frames(&self) -> usize {
        self.features.frames
    }

    pub fn freq_bins(&self) -> usize {
        self.features.freq_bins
    }
}

fn check_inputs(features: &FeatureTensor, doa: &[[f64; 3]], params: &ModelParams) -> Result<()> {
    params.validate()?;
    let cfg = &params.config;
    if features.width != cfg.input_width() || features.freq_bins != cfg.freq_bins {
        return Err(Error::invalid(format!(
            "features are {}x{}x{}, network expects width {} over {} bins",
            features.frames,
            features.freq_bins,
            features.width,
            cfg.input_width(),
            cfg.freq_bins
        )));
    }
    if features.frames == 0 {
        return Err(Error::invalid("no frames to process"));
    }
    if doa.len() != features.frames {
        return Err(Error::invalid(format!("{} DOA rows for {} frames", doa.len(), features.frames)));
    }
    if features.data.iter().any(|v| !v.is_finite()) || doa.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite network input"));
    }
    Ok(())
}

fn to_masks(head_out: &[f64], bins: usize, frames: usize, channels: usize) -> ComplexMaskSet {
    let width = 2 * channels;
    let mut masks = ComplexMaskSet::zeros(channels, bins, frames);
    for ch in 0..channels {
        let m: &mut ComplexSpectrogram = masks.mask_mut(ch);
        for f in 0..bins {
            for i in 0..frames {
                let o = &head_out[(f * frames + i) * width..];
                m.set(f, i, Complex64::new(o[2 * ch], o[2 * ch + 1]));
            }
        }
    }
    masks
}

/// Runs the estimator and keeps every activation for [`backward`].
pub fn forward(features: &FeatureTensor, doa: &[[f64; 3]], params: &ModelParams) -> Result<(ComplexMaskSet, ForwardCache)> {
    check_inputs(features, doa, params)?;
    let cfg = params.config;
    let (frames, bins) = (features.frames, features.freq_bins);
    let (fh, th, out_w) = (cfg.f_hidden, cfg.t_hidden, 2 * cfg.output_channels);

    let freq: Vec<(Trace, Trace)> = (0..frames)
        .into_par_iter()
        .map(|i| {
            let mut h0 = vec![0.0; fh];
            params.doa_encoder.apply(&doa[i], &mut h0);
            let x = features.frame(i);
            (lstm::run(&params.f_forward, x, &h0, false), lstm::run(&params.f_backward, x, &h0, true))
        })
        .collect();
    let (freq_forward, freq_backward): (Vec<Trace>, Vec<Trace>) = freq.into_iter().unzip();

    let time_inputs: Vec<Vec<f64>> = (0..bins)
        .into_par_iter()
        .map(|f| {
            let mut seq = Vec::with_capacity(frames * 2 * fh);
            for i in 0..frames {
                seq.extend_from_slice(freq_forward[i].output_at(f));
                seq.extend_from_slice(freq_backward[i].output_at(f));
            }
            seq
        })
        .collect();

    let zeros = vec![0.0; th];
    let time: Vec<Trace> = time_inputs.par_iter().map(|seq| lstm::run(&params.t_layer, seq, &zeros, false)).collect();

    let mut head_out = vec![0.0; bins * frames * out_w];
    head_out.par_chunks_mut(frames * out_w).zip(time.par_iter()).for_each(|(out, trace)| {
        for i in 0..frames {
            let o = &mut out[i * out_w..(i + 1) * out_w];
            params.head.apply(trace.output_at(i), o);
            o.iter_mut().for_each(|v| *v = v.tanh());
        }
    });

    let masks = to_masks(&head_out, bins, frames, cfg.output_channels);
    let cache = ForwardCache {
        features: features.clone(),
        doa: doa.to_vec(),
        freq_forward,
        freq_backward,
        time_inputs,
        time,
        head_out,
    };
    Ok((masks, cache))
}

/// Mask estimation without keeping activations, frame by frame. Produces
/// the same masks as [`forward`].
pub fn infer(features: &FeatureTensor, doa: &[[f64; 3]], params: &ModelParams) -> Result<ComplexMaskSet> {
    check_inputs(features, doa, params)?;
    let cfg = params.config;
    let (frames, bins) = (features.frames, features.freq_bins);
    let (fh, th, out_w) = (cfg.f_hidden, cfg.t_hidden, 2 * cfg.output_channels);

    let mut h = vec![0.0; bins * th];
    let mut c = vec![0.0; bins * th];
    let mut head_out = vec![0.0; bins * frames * out_w];
    let mut step_in = vec![0.0; 2 * fh];
    let mut gates = vec![0.0; 4 * th];
    let (mut h_new, mut c_new) = (vec![0.0; th], vec![0.0; th]);
    for i in 0..frames {
        let mut h0 = vec![0.0; fh];
        params.doa_encoder.apply(&doa[i], &mut h0);
        let x = features.frame(i);
        let fwd = lstm::run(&params.f_forward, x, &h0, false);
        let bwd = lstm::run(&params.f_backward, x, &h0, true);
        for f in 0..bins {
            step_in[..fh].copy_from_slice(fwd.output_at(f));
            step_in[fh..].copy_from_slice(bwd.output_at(f));
            let (hs, cs) = (&h[f * th..(f + 1) * th], &c[f * th..(f + 1) * th]);
            lstm::step(&params.t_layer, &step_in, hs, cs, &mut gates, &mut c_new, &mut h_new);
            h[f * th..(f + 1) * th].copy_from_slice(&h_new);
            c[f * th..(f + 1) * th].copy_from_slice(&c_new);
            let o = &mut head_out[(f * frames + i) * out_w..(f * frames + i + 1) * out_w];
            params.head.apply(&h_new, o);
            o.iter_mut().for_each(|v| *v = v.tanh());
        }
    }
    Ok(to_masks(&head_out, bins, frames, cfg.output_channels))
}

/// Reverse-mode gradients of a scalar loss given `∂L/∂masks` (as
/// `∂/∂Re + j ∂/∂Im` per bin). Returns parameter gradients and the gradient
/// w.r.t. the input features.
pub fn backward(cache: &ForwardCache, params: &ModelParams, upstream: &ComplexMaskSet) -> Result<(GradientSet, FeatureTensor)> {
    let cfg = params.config;
    let (frames, bins) = (cache.frames(), cache.freq_bins());
    if upstream.channels() != cfg.output_channels || upstream.freq_bins() != bins || upstream.frames() != frames {
        return Err(Error::invalid(format!(
            "upstream gradient is {}x{}x{}, masks were {}x{}x{}",
            upstream.channels(),
            upstream.freq_bins(),
            upstream.frames(),
            cfg.output_channels,
            bins,
            frames
        )));
    }
    if cache.time.len() != bins || cache.features.width != cfg.input_width() {
        return Err(Error::invalid("cache does not belong to these parameters"));
    }
    let (fh, th, out_w) = (cfg.f_hidden, cfg.t_hidden, 2 * cfg.output_channels);

    // Head and time layer, chunked over bins.
    let partials = chunked(bins, |range| {
        let mut g = GradientSet::zeros(cfg);
        let mut d_time_inputs = Vec::with_capacity(range.len());
        let mut dz = vec![0.0; out_w];
        for f in range {
            let trace = &cache.time[f];
            let mut d_hidden = vec![0.0; frames * th];
            for i in 0..frames {
                let o = &cache.head_out[(f * frames + i) * out_w..(f * frames + i + 1) * out_w];
                for ch in 0..cfg.output_channels {
                    let u = upstream.mask(ch).get(f, i);
                    dz[2 * ch] = u.re * (1.0 - o[2 * ch] * o[2 * ch]);
                    dz[2 * ch + 1] = u.im * (1.0 - o[2 * ch + 1] * o[2 * ch + 1]);
                }
                let h = trace.output_at(i);
                let dh = &mut d_hidden[i * th..(i + 1) * th];
                for (r, &z) in dz.iter().enumerate() {
                    g.head.bias.data[r] += z;
                    let w = &params.head.weight.data[r * th..(r + 1) * th];
                    let gw = &mut g.head.weight.data[r * th..(r + 1) * th];
                    for k in 0..th {
                        gw[k] += z * h[k];
                        dh[k] += z * w[k];
                    }
                }
            }
            let mut d_in = vec![0.0; frames * 2 * fh];
            lstm::backward(&params.t_layer, trace, &cache.time_inputs[f], &d_hidden, &mut g.t_layer, &mut d_in);
            d_time_inputs.push(d_in);
        }
        (g, d_time_inputs)
    });
    let mut grads = GradientSet::zeros(cfg);
    let mut d_time_inputs: Vec<Vec<f64>> = Vec::with_capacity(bins);
    for (g, d) in partials {
        grads.add_assign(&g);
        d_time_inputs.extend(d);
    }

    // Frequency layers and DOA encoder, chunked over frames.
    let width = cfg.input_width();
    let partials = chunked(frames, |range| {
        let mut g = GradientSet::zeros(cfg);
        let mut d_feat = Vec::with_capacity(range.len() * bins * width);
        for i in range {
            let mut d_fwd = vec![0.0; bins * fh];
            let mut d_bwd = vec![0.0; bins * fh];
            for f in 0..bins {
                let src = &d_time_inputs[f][i * 2 * fh..(i + 1) * 2 * fh];
                d_fwd[f * fh..(f + 1) * fh].copy_from_slice(&src[..fh]);
                d_bwd[f * fh..(f + 1) * fh].copy_from_slice(&src[fh..]);
            }
            let x = cache.features.frame(i);
            let mut dx = vec![0.0; bins * width];
            let dh0_f = lstm::backward(&params.f_forward, &cache.freq_forward[i], x, &d_fwd, &mut g.f_forward, &mut dx);
            let dh0_b = lstm::backward(&params.f_backward, &cache.freq_backward[i], x, &d_bwd, &mut g.f_backward, &mut dx);
            let doa = cache.doa[i];
            for r in 0..fh {
                let dh0 = dh0_f[r] + dh0_b[r];
                g.doa_encoder.bias.data[r] += dh0;
                for k in 0..3 {
                    g.doa_encoder.weight.data[r * 3 + k] += dh0 * doa[k];
                }
            }
            d_feat.extend(dx);
        }
        (g, d_feat)
    });
    let mut d_features = FeatureTensor::zeros(frames, bins, width);
    d_features.data.clear();
    for (g, d) in partials {
        grads.add_assign(&g);
        d_features.data.extend(d);
    }
    Ok((grads, d_features))
}
