use super::params::LstmParams;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activations of one sequence, stored in processing order.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub steps: usize,
    pub hidden: usize,
    pub reverse: bool,
    pub h0: Vec<f64>,
    /// Post-activation gates `(i, f, g, o)`, `steps × 4H`.
    pub gates: Vec<f64>,
    pub cells: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl Trace {
    pub fn position(&self, step: usize) -> usize {
        if self.reverse {
            self.steps - 1 - step
        } else {
            step
        }
    }

    /// Hidden state produced at sequence position `pos`.
    pub fn output_at(&self, pos: usize) -> &[f64] {
        let s = self.position(pos);
        &self.outputs[s * self.hidden..(s + 1) * self.hidden]
    }
}

/// One LSTM step. `gates` receives the activated gate values.
pub(crate) fn step(
    p: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    h: &mut [f64],
) {
    let (d, hd) = (p.inputs(), p.hidden());
    let (w_ih, w_hh, b) = (&p.w_ih.data, &p.w_hh.data, &p.bias.data);
    for r in 0..4 * hd {
        let wi = &w_ih[r * d..(r + 1) * d];
        let wh = &w_hh[r * hd..(r + 1) * hd];
        let mut z = b[r];
        for k in 0..d {
            z += wi[k] * x[k];
        }
        for k in 0..hd {
            z += wh[k] * h_prev[k];
        }
        gates[r] = z;
    }
    for k in 0..hd {
        let i = sigmoid(gates[k]);
        let f = sigmoid(gates[hd + k]);
        let g = gates[2 * hd + k].tanh();
        let o = sigmoid(gates[3 * hd + k]);
        gates[k] = i;
        gates[hd + k] = f;
        gates[2 * hd + k] = g;
        gates[3 * hd + k] = o;
        c[k] = f * c_prev[k] + i * g;
        h[k] = o * c[k].tanh();
    }
}

/// Runs the layer over `inputs` (`steps × D`, position order) from hidden
/// state `h0` and a zero cell state.
pub(crate) fn run(p: &LstmParams, inputs: &[f64], h0: &[f64], reverse: bool) -> Trace {
    let (d, hd) = (p.inputs(), p.hidden());
    let steps = inputs.len() / d;
    let mut trace = Trace {
        steps,
        hidden: hd,
        reverse,
        h0: h0.to_vec(),
        gates: vec![0.0; steps * 4 * hd],
        cells: vec![0.0; steps * hd],
        outputs: vec![0.0; steps * hd],
    };
    let zeros = vec![0.0; hd];
    for s in 0..steps {
        let pos = trace.position(s);
        let x = &inputs[pos * d..(pos + 1) * d];
        let (done_c, rest_c) = trace.cells.split_at_mut(s * hd);
        let (done_h, rest_h) = trace.outputs.split_at_mut(s * hd);
        let (h_prev, c_prev) = if s == 0 {
            (h0, zeros.as_slice())
        } else {
            (&done_h[(s - 1) * hd..], &done_c[(s - 1) * hd..])
        };
        step(
            p,
            x,
            h_prev,
            c_prev,
            &mut trace.gates[s * 4 * hd..(s + 1) * 4 * hd],
            &mut rest_c[..hd],
            &mut rest_h[..hd],
        );
    }
    trace
}

/// Back-propagates `d_out` (`steps × H`, position order) through a traced
/// sequence. Accumulates parameter gradients into `grads` and input
/// gradients into `d_inputs`; returns the gradient w.r.t. `h0`.
pub(crate) fn backward(
    p: &LstmParams,
    trace: &Trace,
    inputs: &[f64],
    d_out: &[f64],
    grads: &mut LstmParams,
    d_inputs: &mut [f64],
) -> Vec<f64> {
    let (d, hd) = (p.inputs(), p.hidden());
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];
    let zeros = vec![0.0; hd];
    for s in (0..trace.steps).rev() {
        let pos = trace.position(s);
        let x = &inputs[pos * d..(pos + 1) * d];
        let gates = &trace.gates[s * 4 * hd..(s + 1) * 4 * hd];
        let c = &trace.cells[s * hd..(s + 1) * hd];
        let (h_prev, c_prev) = if s == 0 {
            (trace.h0.as_slice(), zeros.as_slice())
        } else {
            (&trace.outputs[(s - 1) * hd..s * hd], &trace.cells[(s - 1) * hd..s * hd])
        };
        for k in 0..hd {
            let (i, f, g, o) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
            let dh = d_out[pos * hd + k] + dh_next[k];
            let tc = c[k].tanh();
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            dz[k] = dc * g * i * (1.0 - i);
            dz[hd + k] = dc * c_prev[k] * f * (1.0 - f);
            dz[2 * hd + k] = dc * i * (1.0 - g * g);
            dz[3 * hd + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        let dx = &mut d_inputs[pos * d..(pos + 1) * d];
        for (r, &g) in dz.iter().enumerate() {
            grads.bias.data[r] += g;
            if g == 0.0 {
                continue;
            }
            let wi = &p.w_ih.data[r * d..(r + 1) * d];
            let gi = &mut grads.w_ih.data[r * d..(r + 1) * d];
            for k in 0..d {
                gi[k] += g * x[k];
                dx[k] += g * wi[k];
            }
            let wh = &p.w_hh.data[r * hd..(r + 1) * hd];
            let gh = &mut grads.w_hh.data[r * hd..(r + 1) * hd];
            for k in 0..hd {
                gh[k] += g * h_prev[k];
                dh_next[k] += g * wh[k];
            }
        }
    }
    dh_next
}
