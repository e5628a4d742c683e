//! Recurrent combiners reducing a node's embedding history to one vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::history::NodeHistory;
use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out += m (rows x cols) * x`.
fn gemv_add(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += mᵀ * y` for `m` of shape `y.len() x out.len()`.
fn gemv_t_add(out: &mut [f64], m: &[f64], y: &[f64]) {
    let cols = out.len();
    for (row, &yi) in m.chunks_exact(cols).zip(y) {
        if yi == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yi;
        }
    }
}

/// `m += y xᵀ`.
fn outer_add(m: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &yi) in m.chunks_exact_mut(cols).zip(y) {
        if yi == 0.0 {
            continue;
        }
        for (a, b) in row.iter_mut().zip(x) {
            *a += yi * b;
        }
    }
}

/// Single-layer LSTM with hidden size equal to the input size `d`. Gate
/// blocks are stacked in the order input, forget, output, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub dim: usize,
    /// `4d x d`, applied to the step input.
    pub w_input: Vec<f64>,
    /// `4d x d`, applied to the previous hidden state.
    pub w_recurrent: Vec<f64>,
    /// `4d`.
    pub bias: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            w_input: vec![0.0; 4 * dim * dim],
            w_recurrent: vec![0.0; 4 * dim * dim],
            bias: vec![0.0; 4 * dim],
        }
    }

    /// Weights uniform in `±1/√d`, biases zero except the forget gate at 1.
    pub fn init<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let mut p = Self::zeros(dim);
        for w in p.w_input.iter_mut().chain(p.w_recurrent.iter_mut()) {
            *w = rng.gen_range(-bound..bound);
        }
        p.bias[dim..2 * dim].iter_mut().for_each(|b| *b = 1.0);
        p
    }
}

/// Literal recursion `f_{t+1} = tanh(A f_t + B x_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub dim: usize,
    /// Recurrent `d x d`.
    pub a: Vec<f64>,
    /// Input `d x d`.
    pub b: Vec<f64>,
}

impl RnnParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
            b: vec![0.0; dim * dim],
        }
    }

    pub fn init<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let mut p = Self::zeros(dim);
        for w in p.a.iter_mut().chain(p.b.iter_mut()) {
            *w = rng.gen_range(-bound..bound);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerKind {
    Lstm,
    Rnn,
    /// No recurrence: the latest observed embedding is the node vector.
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Combiner {
    Lstm(LstmParams),
    Rnn(RnnParams),
    Static { dim: usize },
}

/// Per-step values recorded by a forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    steps: Vec<usize>,
    /// LSTM: `[i, f, o, g, c, tanh c, h_prev, c_prev]` per step, each `d`
    /// long. RNN: `[h, h_prev]`.
    buf: Vec<f64>,
}

const LSTM_SLOTS: usize = 8;
const RNN_SLOTS: usize = 2;

impl Combiner {
    pub fn init<R: Rng>(kind: CombinerKind, dim: usize, rng: &mut R) -> Self {
        match kind {
            CombinerKind::Lstm => Combiner::Lstm(LstmParams::init(dim, rng)),
            CombinerKind::Rnn => Combiner::Rnn(RnnParams::init(dim, rng)),
            CombinerKind::Static => Combiner::Static { dim },
        }
    }

    pub fn kind(&self) -> CombinerKind {
        match self {
            Combiner::Lstm(_) => CombinerKind::Lstm,
            Combiner::Rnn(_) => CombinerKind::Rnn,
            Combiner::Static { .. } => CombinerKind::Static,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Combiner::Lstm(p) => p.dim,
            Combiner::Rnn(p) => p.dim,
            Combiner::Static { dim } => *dim,
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            Combiner::Lstm(p) => Combiner::Lstm(LstmParams::zeros(p.dim)),
            Combiner::Rnn(p) => Combiner::Rnn(RnnParams::zeros(p.dim)),
            Combiner::Static { dim } => Combiner::Static { dim: *dim },
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            Combiner::Lstm(p) => vec![
                ("lstm.w_input", &p.w_input[..]),
                ("lstm.w_recurrent", &p.w_recurrent[..]),
                ("lstm.bias", &p.bias[..]),
            ],
            Combiner::Rnn(p) => vec![("rnn.a", &p.a[..]), ("rnn.b", &p.b[..])],
            Combiner::Static { .. } => Vec::new(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Combiner::Lstm(p) => vec![&mut p.w_input[..], &mut p.w_recurrent[..], &mut p.bias[..]],
            Combiner::Rnn(p) => vec![&mut p.a[..], &mut p.b[..]],
            Combiner::Static { .. } => Vec::new(),
        }
    }

    /// Runs the combiner over the unmasked rows in time order and returns
    /// the final hidden state. Masked steps are skipped and carry the state
    /// through unchanged.
    pub fn forward(
        &self,
        rows: &[f64],
        mask: &[bool],
        trace: Option<&mut Trace>,
    ) -> Result<Vec<f64>> {
        let d = self.dim();
        let observed = || (0..mask.len()).filter(|&t| mask[t]);
        if observed().next().is_none() {
            return Err(Error::invalid("history has no observed step"));
        }
        let row = |t: usize| &rows[t * d..(t + 1) * d];
        let mut local = Trace::default();
        let trace = trace.unwrap_or(&mut local);
        trace.steps.clear();
        trace.buf.clear();
        let h = match self {
            Combiner::Static { .. } => {
                let last = observed().next_back().expect("checked above");
                trace.steps.push(last);
                row(last).to_vec()
            }
            Combiner::Lstm(p) => lstm_run(p, rows, mask, trace)?,
            Combiner::Rnn(p) => {
                let mut h = vec![0.0; d];
                for t in observed() {
                    let mut z = vec![0.0; d];
                    gemv_add(&mut z, &p.a, &h);
                    gemv_add(&mut z, &p.b, row(t));
                    let prev = std::mem::replace(&mut h, z.iter().map(|v| v.tanh()).collect());
                    if h.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite {
                            context: format!("in RNN state at step {t}"),
                        });
                    }
                    trace.buf.extend_from_slice(&h);
                    trace.buf.extend_from_slice(&prev);
                    trace.steps.push(t);
                }
                h
            }
        };
        Ok(h)
    }

    /// Backpropagates `dh` (gradient at the final hidden state) through a
    /// recorded forward pass. Parameter gradients are added to `grad`;
    /// input-row gradients are added to `d_rows` (laid out like the rows).
    pub fn backward(
        &self,
        rows: &[f64],
        trace: &Trace,
        dh: &[f64],
        grad: &mut Combiner,
        d_rows: Option<&mut [f64]>,
    ) {
        let d = self.dim();
        let row = |t: usize| &rows[t * d..(t + 1) * d];
        let mut sink = Vec::new();
        let d_rows = match d_rows {
            Some(r) => r,
            None => {
                sink.resize(rows.len(), 0.0);
                &mut sink[..]
            }
        };
        match (self, grad) {
            (Combiner::Static { .. }, _) => {
                let t = trace.steps[0];
                for (a, b) in d_rows[t * d..(t + 1) * d].iter_mut().zip(dh) {
                    *a += b;
                }
            }
            (Combiner::Lstm(p), Combiner::Lstm(g)) => {
                let mut dh = dh.to_vec();
                let mut dc = vec![0.0; d];
                let mut dz = vec![0.0; 4 * d];
                for (s, &t) in trace.steps.iter().enumerate().rev() {
                    let slot = &trace.buf[s * LSTM_SLOTS * d..(s + 1) * LSTM_SLOTS * d];
                    for k in 0..d {
                        let (i, f, o, gg) =
                            (slot[k], slot[d + k], slot[2 * d + k], slot[3 * d + k]);
                        let tc = slot[5 * d + k];
                        let c_prev = slot[7 * d + k];
                        let d_o = dh[k] * tc;
                        let dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
                        let di = dck * gg;
                        let dg = dck * i;
                        let df = dck * c_prev;
                        dc[k] = dck * f;
                        dz[k] = di * i * (1.0 - i);
                        dz[d + k] = df * f * (1.0 - f);
                        dz[2 * d + k] = d_o * o * (1.0 - o);
                        dz[3 * d + k] = dg * (1.0 - gg * gg);
                    }
                    let h_prev = &slot[6 * d..7 * d];
                    outer_add(&mut g.w_input, &dz, row(t));
                    outer_add(&mut g.w_recurrent, &dz, h_prev);
                    for (b, z) in g.bias.iter_mut().zip(&dz) {
                        *b += z;
                    }
                    gemv_t_add(&mut d_rows[t * d..(t + 1) * d], &p.w_input, &dz);
                    dh.iter_mut().for_each(|v| *v = 0.0);
                    gemv_t_add(&mut dh, &p.w_recurrent, &dz);
                }
            }
            (Combiner::Rnn(p), Combiner::Rnn(g)) => {
                let mut dh = dh.to_vec();
                let mut da = vec![0.0; d];
                for (s, &t) in trace.steps.iter().enumerate().rev() {
                    let slot = &trace.buf[s * RNN_SLOTS * d..(s + 1) * RNN_SLOTS * d];
                    let (h, h_prev) = slot.split_at(d);
                    for k in 0..d {
                        da[k] = dh[k] * (1.0 - h[k] * h[k]);
                    }
                    outer_add(&mut g.a, &da, h_prev);
                    outer_add(&mut g.b, &da, row(t));
                    gemv_t_add(&mut d_rows[t * d..(t + 1) * d], &p.b, &da);
                    dh.iter_mut().for_each(|v| *v = 0.0);
                    gemv_t_add(&mut dh, &p.a, &da);
                }
            }
            _ => panic!("gradient buffer does not match combiner kind"),
        }
    }
}

fn lstm_run(p: &LstmParams, rows: &[f64], mask: &[bool], trace: &mut Trace) -> Result<Vec<f64>> {
    let d = p.dim;
    let row = |t: usize| &rows[t * d..(t + 1) * d];
    let observed = (0..mask.len()).filter(|&t| mask[t]);
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    let mut z = vec![0.0; 4 * d];
    for t in observed {
        z.copy_from_slice(&p.bias);
        gemv_add(&mut z, &p.w_input, row(t));
        gemv_add(&mut z, &p.w_recurrent, &h);
        let base = trace.buf.len();
        trace.buf.resize(base + LSTM_SLOTS * d, 0.0);
        let slot = &mut trace.buf[base..];
        for k in 0..d {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[d + k]);
            let o = sigmoid(z[2 * d + k]);
            let g = z[3 * d + k].tanh();
            let c_new = f * c[k] + i * g;
            let tc = c_new.tanh();
            slot[k] = i;
            slot[d + k] = f;
            slot[2 * d + k] = o;
            slot[3 * d + k] = g;
            slot[4 * d + k] = c_new;
            slot[5 * d + k] = tc;
            slot[6 * d + k] = h[k];
            slot[7 * d + k] = c[k];
            c[k] = c_new;
            h[k] = o * tc;
        }
        if h.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("in LSTM state at step {t}"),
            });
        }
        trace.steps.push(t);
    }
    Ok(h)
}

/// Final hidden state of the LSTM over `history`.
pub fn lstm_forward(history: &NodeHistory, params: &LstmParams) -> Result<Vec<f64>> {
    if history.dim != params.dim {
        return Err(Error::invalid("history and LSTM dimensions differ"));
    }
    if !history.mask.iter().any(|&m| m) {
        return Err(Error::invalid("history has no observed step"));
    }
    lstm_run(params, &history.rows, &history.mask, &mut Trace::default())
}
