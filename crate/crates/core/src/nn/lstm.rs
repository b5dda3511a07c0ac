use super::{sigmoid, Gate, LstmParams};
use crate::{Error, Result};

/// Hidden and cell state of the recurrent layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
        }
    }
}

/// Gate activations of one step, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCache {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// Writes one step into the output slices. `gates` holds f, g̃, i, o back to
/// back (4·H entries).
#[inline(always)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn step(
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c_out: &mut [f64],
    h_out: &mut [f64],
    tanh_c_out: &mut [f64],
) {
    let d = params.input_size();
    let h = params.hidden_size();
    for gate in Gate::ALL {
        let w = params.w(gate);
        let u = params.u(gate);
        let b = params.b(gate);
        let out = &mut gates[gate.index() * h..(gate.index() + 1) * h];
        for r in 0..h {
            let wx = dot(&w[r * d..(r + 1) * d], x);
            let uh = dot(&u[r * h..(r + 1) * h], h_prev);
            let z = b[r] + wx + uh;
            out[r] = if gate == Gate::Cell { z.tanh() } else { sigmoid(z) };
        }
    }
    let (f, rest) = gates.split_at(h);
    let (g, rest) = rest.split_at(h);
    let (i, o) = rest.split_at(h);
    for r in 0..h {
        let c = f[r] * c_prev[r] + i[r] * g[r];
        let tc = c.tanh();
        c_out[r] = c;
        tanh_c_out[r] = tc;
        h_out[r] = o[r] * tc;
    }
}

/// One LSTM step: sigmoid gates f, i, o, tanh candidate g̃,
/// `c = f⊙c_prev + i⊙g̃` and `h = o⊙tanh(c)`.
pub fn lstm_cell_forward(x: &[f64], state: &LstmState, params: &LstmParams) -> (LstmState, CellCache) {
    let h = params.hidden_size();
    assert_eq!(x.len(), params.input_size(), "input width does not match parameters");
    assert!(state.h.len() == h && state.c.len() == h, "state size does not match parameters");
    let mut gates = vec![0.0; 4 * h];
    let mut next = LstmState::zeros(h);
    let mut tanh_c = vec![0.0; h];
    step(params, x, &state.h, &state.c, &mut gates, &mut next.c, &mut next.h, &mut tanh_c);
    let cache = CellCache {
        f: gates[..h].to_vec(),
        g: gates[h..2 * h].to_vec(),
        i: gates[2 * h..3 * h].to_vec(),
        o: gates[3 * h..].to_vec(),
        tanh_c,
    };
    (next, cache)
}

/// Activations of a whole unrolled window, stored flat and reusable
/// across windows of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCache {
    input_size: usize,
    hidden_size: usize,
    steps: usize,
    xs: Vec<f64>,
    /// (steps+1)·H, row 0 is the zero initial state.
    hs: Vec<f64>,
    cs: Vec<f64>,
    /// steps·4H
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    prediction: f64,
}

impl SequenceCache {
    pub fn new(input_size: usize, hidden_size: usize, steps: usize) -> Self {
        SequenceCache {
            input_size,
            hidden_size,
            steps,
            xs: vec![0.0; steps * input_size],
            hs: vec![0.0; (steps + 1) * hidden_size],
            cs: vec![0.0; (steps + 1) * hidden_size],
            gates: vec![0.0; steps * 4 * hidden_size],
            tanh_c: vec![0.0; steps * hidden_size],
            prediction: 0.0,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn prediction(&self) -> f64 {
        self.prediction
    }

    /// Hidden state after the last step.
    pub fn final_hidden(&self) -> &[f64] {
        &self.hs[self.steps * self.hidden_size..]
    }

    /// Runs the window through the network, overwriting this cache.
    pub(crate) fn run(&mut self, params: &LstmParams, xs: &[f64]) -> f64 {
        let (d, h) = (self.input_size, self.hidden_size);
        debug_assert_eq!(xs.len(), self.steps * d);
        self.xs.copy_from_slice(xs);
        for t in 0..self.steps {
            let (hs_done, hs_next) = self.hs.split_at_mut((t + 1) * h);
            let (cs_done, cs_next) = self.cs.split_at_mut((t + 1) * h);
            step(
                params,
                &self.xs[t * d..(t + 1) * d],
                &hs_done[t * h..],
                &cs_done[t * h..],
                &mut self.gates[t * 4 * h..(t + 1) * 4 * h],
                &mut cs_next[..h],
                &mut hs_next[..h],
                &mut self.tanh_c[t * h..(t + 1) * h],
            );
        }
        let readout: f64 = params
            .readout_weights()
            .iter()
            .zip(self.final_hidden())
            .map(|(w, h)| w * h)
            .sum();
        self.prediction = readout + params.readout_bias();
        self.prediction
    }
}

/// Unrolls the network from a zero state over `xs` (time-major, `steps·D`
/// values) and returns the readout `W_d·h_last + b_d`.
pub fn forward_sequence(xs: &[f64], params: &LstmParams) -> Result<(f64, SequenceCache)> {
    let d = params.input_size();
    if xs.is_empty() {
        return Err(Error::input("empty input sequence"));
    }
    if !xs.len().is_multiple_of(d) {
        return Err(Error::input(format!(
            "sequence length {} is not a multiple of the input width {d}",
            xs.len()
        )));
    }
    let mut cache = SequenceCache::new(d, params.hidden_size(), xs.len() / d);
    let pred = cache.run(params, xs);
    Ok((pred, cache))
}

/// Scratch buffers for [`backward_sequence`].
#[derive(Debug, Default)]
pub(crate) struct BackwardScratch {
    dh: Vec<f64>,
    dc: Vec<f64>,
    dh_prev: Vec<f64>,
    dz: Vec<f64>,
}

/// Accumulates `d_prediction · ∂prediction/∂θ` into `grads`.
pub fn backward_sequence(cache: &SequenceCache, d_prediction: f64, params: &LstmParams, grads: &mut LstmParams) {
    let mut scratch = BackwardScratch::default();
    backward_with(cache, d_prediction, params, grads, &mut scratch);
}

pub(crate) fn backward_with(
    cache: &SequenceCache,
    d_prediction: f64,
    params: &LstmParams,
    grads: &mut LstmParams,
    scratch: &mut BackwardScratch,
) {
    let (d, h) = (params.input_size(), params.hidden_size());
    assert!(
        cache.input_size == d && cache.hidden_size == h,
        "cache shape does not match parameters"
    );
    assert!(grads.same_shape(params), "gradient buffer shape does not match parameters");

    *grads.readout_bias_mut() += d_prediction;
    for (g, hv) in grads.readout_weights_mut().iter_mut().zip(cache.final_hidden()) {
        *g += d_prediction * hv;
    }

    let BackwardScratch { dh, dc, dh_prev, dz } = scratch;
    dh.clear();
    dh.extend(params.readout_weights().iter().map(|w| w * d_prediction));
    dc.clear();
    dc.resize(h, 0.0);
    dz.clear();
    dz.resize(4 * h, 0.0);

    for t in (0..cache.steps).rev() {
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let (f, g, i, o) = (&gates[..h], &gates[h..2 * h], &gates[2 * h..3 * h], &gates[3 * h..]);
        let tanh_c = &cache.tanh_c[t * h..(t + 1) * h];
        let c_prev = &cache.cs[t * h..(t + 1) * h];
        let h_prev = &cache.hs[t * h..(t + 1) * h];
        let x = &cache.xs[t * d..(t + 1) * d];

        for r in 0..h {
            let d_o = dh[r] * tanh_c[r];
            let dcr = dc[r] + dh[r] * o[r] * (1.0 - tanh_c[r] * tanh_c[r]);
            let d_f = dcr * c_prev[r];
            let d_g = dcr * i[r];
            let d_i = dcr * g[r];
            dz[r] = d_f * f[r] * (1.0 - f[r]);
            dz[h + r] = d_g * (1.0 - g[r] * g[r]);
            dz[2 * h + r] = d_i * i[r] * (1.0 - i[r]);
            dz[3 * h + r] = d_o * o[r] * (1.0 - o[r]);
            dc[r] = dcr * f[r];
        }

        dh_prev.clear();
        dh_prev.resize(h, 0.0);
        for gate in Gate::ALL {
            let dzk = &dz[gate.index() * h..(gate.index() + 1) * h];
            let gw = grads.w_mut(gate);
            for r in 0..h {
                let z = dzk[r];
                for (gwv, xv) in gw[r * d..(r + 1) * d].iter_mut().zip(x) {
                    *gwv += z * xv;
                }
            }
            for (gb, z) in grads.b_mut(gate).iter_mut().zip(dzk) {
                *gb += z;
            }
            let gu = grads.u_mut(gate);
            for r in 0..h {
                let z = dzk[r];
                for (guv, hv) in gu[r * h..(r + 1) * h].iter_mut().zip(h_prev) {
                    *guv += z * hv;
                }
            }
            let u = params.u(gate);
            for r in 0..h {
                let z = dzk[r];
                for (acc, uv) in dh_prev.iter_mut().zip(&u[r * h..(r + 1) * h]) {
                    *acc += z * uv;
                }
            }
        }
        std::mem::swap(dh, dh_prev);
    }
}
