//! Forward recurrences and backpropagation through time for the three cell
//! kinds. Everything works on a single sequence; batches accumulate.
//!
//! Gates use the logistic sigmoid and candidate states use tanh. The
//! configurable hidden activation applies only to the plain RNN update.

use super::params::{Cell, Gate, ModelParams, FALL, NO_FALL};
use super::Activation;
use crate::baseline::sigmoid;
use crate::error::{Error, Result};

/// Per-step values kept for the backward pass, each `steps × hidden`.
#[derive(Debug, Clone)]
enum Trace {
    Rnn {
        h: Vec<f64>,
    },
    Lstm {
        i: Vec<f64>,
        f: Vec<f64>,
        g: Vec<f64>,
        o: Vec<f64>,
        c: Vec<f64>,
        tanh_c: Vec<f64>,
        h: Vec<f64>,
    },
    Gru {
        z: Vec<f64>,
        r: Vec<f64>,
        n: Vec<f64>,
        h: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    hidden: usize,
    steps: usize,
    trace: Trace,
    /// Final hidden state after dropout, as seen by the readout.
    readout_input: Vec<f64>,
    pub logits: [f64; 2],
    pub probs: [f64; 2],
}

impl ForwardPass {
    /// Hidden states `h_1 ..= h_T`.
    pub fn hidden_states(&self) -> impl Iterator<Item = &[f64]> {
        let h = match &self.trace {
            Trace::Rnn { h } | Trace::Lstm { h, .. } | Trace::Gru { h, .. } => h,
        };
        h.chunks(self.hidden)
    }

    /// LSTM cell-gate output or GRU candidate state per step.
    pub fn candidate_states(&self) -> Option<impl Iterator<Item = &[f64]>> {
        match &self.trace {
            Trace::Lstm { g, .. } => Some(g.chunks(self.hidden)),
            Trace::Gru { n, .. } => Some(n.chunks(self.hidden)),
            Trace::Rnn { .. } => None,
        }
    }

    /// LSTM memory states `c_1 ..= c_T`.
    pub fn cell_states(&self) -> Option<impl Iterator<Item = &[f64]>> {
        match &self.trace {
            Trace::Lstm { c, .. } => Some(c.chunks(self.hidden)),
            _ => None,
        }
    }

    pub fn final_hidden(&self) -> &[f64] {
        self.hidden_states().last().expect("non-empty sequence")
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn prob_fall(&self) -> f64 {
        self.probs[FALL]
    }
}

pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// `out = bias + w_in · x + w_hid · h`.
fn affine(g: &Gate, x: &[f64], h: &[f64], out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let wi = g.w_in.row(j);
        let wh = g.w_hid.row(j);
        let mut s = g.bias[j];
        for (w, v) in wi.iter().zip(x) {
            s += w * v;
        }
        for (w, v) in wh.iter().zip(h) {
            s += w * v;
        }
        *o = s;
    }
}

/// Accumulates gradients of one affine map given the pre-activation
/// gradient `da`, and adds `w_hidᵀ · da` into `d_h`.
fn affine_back(g: &Gate, grad: &mut Gate, da: &[f64], x: &[f64], h: &[f64], d_h: &mut [f64]) {
    let ni = x.len();
    let nh = h.len();
    for (j, &d) in da.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        grad.bias[j] += d;
        for (k, v) in x.iter().enumerate() {
            grad.w_in.data[j * ni + k] += d * v;
        }
        let row = &mut grad.w_hid.data[j * nh..(j + 1) * nh];
        for (gw, v) in row.iter_mut().zip(h) {
            *gw += d * v;
        }
        for (dh, w) in d_h.iter_mut().zip(g.w_hid.row(j)) {
            *dh += w * d;
        }
    }
}

fn check_finite(v: &[f64], step: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("hidden state at step {step}")))
    }
}

/// Runs the cell over `seq` from a zero state and applies the readout to
/// the final hidden state. `dropout_mask`, when given, multiplies the
/// final hidden state elementwise (inverted-dropout scaling included).
pub fn forward(p: &ModelParams, seq: &[f64], dropout_mask: Option<&[f64]>) -> Result<ForwardPass> {
    if seq.is_empty() {
        return Err(Error::Data("cannot run a recurrent pass over an empty sequence".into()));
    }
    let nh = p.hidden_size();
    let ni = p.input_size();
    if !seq.len().is_multiple_of(ni) {
        return Err(Error::Data(format!(
            "sequence length {} is not a multiple of input size {ni}",
            seq.len()
        )));
    }
    let steps = seq.len() / ni;
    let zero = vec![0.0; nh];
    let mut a = vec![0.0; nh];

    let trace = match &p.cell {
        Cell::Rnn { hidden } => {
            let mut h = vec![0.0; steps * nh];
            for t in 0..steps {
                let (prev, cur) = h.split_at_mut(t * nh);
                let hp = if t == 0 { &zero[..] } else { &prev[(t - 1) * nh..] };
                affine(hidden, &seq[t * ni..(t + 1) * ni], hp, &mut a);
                let ht = &mut cur[..nh];
                for (o, &v) in ht.iter_mut().zip(&a) {
                    *o = p.activation.apply(v);
                }
                check_finite(ht, t + 1)?;
            }
            Trace::Rnn { h }
        }
        Cell::Lstm {
            input,
            forget,
            cell,
            output,
        } => {
            let mut tr = [(); 7].map(|_| vec![0.0; steps * nh]);
            for t in 0..steps {
                let x = &seq[t * ni..(t + 1) * ni];
                let (s, e) = (t * nh, (t + 1) * nh);
                let hp = if t == 0 { zero.clone() } else { tr[6][s - nh..s].to_vec() };
                let cp = if t == 0 { zero.clone() } else { tr[4][s - nh..s].to_vec() };
                affine(input, x, &hp, &mut a);
                for (o, &v) in tr[0][s..e].iter_mut().zip(&a) {
                    *o = sigmoid(v);
                }
                affine(forget, x, &hp, &mut a);
                for (o, &v) in tr[1][s..e].iter_mut().zip(&a) {
                    *o = sigmoid(v);
                }
                affine(cell, x, &hp, &mut a);
                for (o, &v) in tr[2][s..e].iter_mut().zip(&a) {
                    *o = v.tanh();
                }
                affine(output, x, &hp, &mut a);
                for (o, &v) in tr[3][s..e].iter_mut().zip(&a) {
                    *o = sigmoid(v);
                }
                for j in 0..nh {
                    let k = s + j;
                    let c = tr[1][k] * cp[j] + tr[0][k] * tr[2][k];
                    tr[4][k] = c;
                    tr[5][k] = c.tanh();
                    tr[6][k] = tr[3][k] * tr[5][k];
                }
                check_finite(&tr[6][s..e], t + 1)?;
            }
            let [i, f, g, o, c, tanh_c, h] = tr;
            Trace::Lstm {
                i,
                f,
                g,
                o,
                c,
                tanh_c,
                h,
            }
        }
        Cell::Gru {
            update,
            reset,
            candidate,
        } => {
            let mut z = vec![0.0; steps * nh];
            let mut r = vec![0.0; steps * nh];
            let mut n = vec![0.0; steps * nh];
            let mut h = vec![0.0; steps * nh];
            let mut rh = vec![0.0; nh];
            for t in 0..steps {
                let x = &seq[t * ni..(t + 1) * ni];
                let (s, e) = (t * nh, (t + 1) * nh);
                let hp = if t == 0 { zero.clone() } else { h[s - nh..s].to_vec() };
                affine(update, x, &hp, &mut a);
                for (o, &v) in z[s..e].iter_mut().zip(&a) {
                    *o = sigmoid(v);
                }
                affine(reset, x, &hp, &mut a);
                for (o, &v) in r[s..e].iter_mut().zip(&a) {
                    *o = sigmoid(v);
                }
                for j in 0..nh {
                    rh[j] = r[s + j] * hp[j];
                }
                affine(candidate, x, &rh, &mut a);
                for (o, &v) in n[s..e].iter_mut().zip(&a) {
                    *o = v.tanh();
                }
                for j in 0..nh {
                    let k = s + j;
                    h[k] = (1.0 - z[k]) * hp[j] + z[k] * n[k];
                }
                check_finite(&h[s..e], t + 1)?;
            }
            Trace::Gru { z, r, n, h }
        }
    };

    let last = &match &trace {
        Trace::Rnn { h } | Trace::Lstm { h, .. } | Trace::Gru { h, .. } => h,
    }[(steps - 1) * nh..];
    let readout_input: Vec<f64> = match dropout_mask {
        Some(m) => {
            if m.len() != nh {
                return Err(Error::Data(format!(
                    "dropout mask has {} entries, hidden size is {nh}",
                    m.len()
                )));
            }
            last.iter().zip(m).map(|(h, m)| h * m).collect()
        }
        None => last.to_vec(),
    };
    let mut logits = [0.0; 2];
    for (c, l) in logits.iter_mut().enumerate() {
        *l = p.b_out[c]
            + p.w_out
                .row(c)
                .iter()
                .zip(&readout_input)
                .map(|(w, h)| w * h)
                .sum::<f64>();
    }
    if !logits.iter().all(|l| l.is_finite()) {
        return Err(Error::NonFinite("readout logits".into()));
    }
    Ok(ForwardPass {
        hidden: nh,
        steps,
        trace,
        readout_input,
        probs: softmax2(logits),
        logits,
    })
}

/// Adds `weight * d(-ln p_label)/dθ` for one sequence into `grads`.
pub fn backward_into(
    p: &ModelParams,
    seq: &[f64],
    fwd: &ForwardPass,
    label: bool,
    dropout_mask: Option<&[f64]>,
    weight: f64,
    grads: &mut ModelParams,
) -> Result<()> {
    let nh = fwd.hidden;
    let ni = p.input_size();
    let steps = fwd.steps;
    let target = if label { FALL } else { NO_FALL };

    // Softmax + cross-entropy: dL/dz = p - onehot(label).
    let mut dz = fwd.probs;
    dz[target] -= 1.0;
    for v in &mut dz {
        *v *= weight;
    }
    let mut dh = vec![0.0; nh];
    for (c, &d) in dz.iter().enumerate() {
        grads.b_out[c] += d;
        let row = &mut grads.w_out.data[c * nh..(c + 1) * nh];
        for (g, h) in row.iter_mut().zip(&fwd.readout_input) {
            *g += d * h;
        }
        for (dhj, w) in dh.iter_mut().zip(p.w_out.row(c)) {
            *dhj += w * d;
        }
    }
    if let Some(m) = dropout_mask {
        for (d, m) in dh.iter_mut().zip(m) {
            *d *= m;
        }
    }

    let zero = vec![0.0; nh];
    let mut da = vec![0.0; nh];
    let mut dh_prev = vec![0.0; nh];

    match (&p.cell, &mut grads.cell, &fwd.trace) {
        (Cell::Rnn { hidden }, Cell::Rnn { hidden: gh }, Trace::Rnn { h }) => {
            for t in (0..steps).rev() {
                let s = t * nh;
                let hp = if t == 0 { &zero[..] } else { &h[s - nh..s] };
                for j in 0..nh {
                    da[j] = dh[j] * p.activation.derivative_from_output(h[s + j]);
                }
                dh_prev.fill(0.0);
                affine_back(hidden, gh, &da, &seq[t * ni..(t + 1) * ni], hp, &mut dh_prev);
                std::mem::swap(&mut dh, &mut dh_prev);
            }
        }
        (
            Cell::Lstm {
                input,
                forget,
                cell,
                output,
            },
            Cell::Lstm {
                input: gi,
                forget: gf,
                cell: gc,
                output: go,
            },
            Trace::Lstm {
                i,
                f,
                g,
                o,
                c,
                tanh_c,
                h,
            },
        ) => {
            let mut dc = vec![0.0; nh];
            let mut d_i = vec![0.0; nh];
            let mut d_f = vec![0.0; nh];
            let mut d_g = vec![0.0; nh];
            let mut d_o = vec![0.0; nh];
            for t in (0..steps).rev() {
                let s = t * nh;
                let x = &seq[t * ni..(t + 1) * ni];
                let hp = if t == 0 { &zero[..] } else { &h[s - nh..s] };
                let cp = if t == 0 { &zero[..] } else { &c[s - nh..s] };
                for j in 0..nh {
                    let k = s + j;
                    let tc = tanh_c[k];
                    d_o[j] = dh[j] * tc * o[k] * (1.0 - o[k]);
                    dc[j] += dh[j] * o[k] * (1.0 - tc * tc);
                    d_i[j] = dc[j] * g[k] * i[k] * (1.0 - i[k]);
                    d_g[j] = dc[j] * i[k] * (1.0 - g[k] * g[k]);
                    d_f[j] = dc[j] * cp[j] * f[k] * (1.0 - f[k]);
                    dc[j] *= f[k];
                }
                dh_prev.fill(0.0);
                affine_back(input, gi, &d_i, x, hp, &mut dh_prev);
                affine_back(forget, gf, &d_f, x, hp, &mut dh_prev);
                affine_back(cell, gc, &d_g, x, hp, &mut dh_prev);
                affine_back(output, go, &d_o, x, hp, &mut dh_prev);
                std::mem::swap(&mut dh, &mut dh_prev);
            }
        }
        (
            Cell::Gru {
                update,
                reset,
                candidate,
            },
            Cell::Gru {
                update: gz,
                reset: gr,
                candidate: gn,
            },
            Trace::Gru { z, r, n, h },
        ) => {
            let mut d_z = vec![0.0; nh];
            let mut d_r = vec![0.0; nh];
            let mut d_n = vec![0.0; nh];
            let mut d_rh = vec![0.0; nh];
            let mut rh = vec![0.0; nh];
            for t in (0..steps).rev() {
                let s = t * nh;
                let x = &seq[t * ni..(t + 1) * ni];
                let hp = if t == 0 { &zero[..] } else { &h[s - nh..s] };
                for j in 0..nh {
                    let k = s + j;
                    d_n[j] = dh[j] * z[k] * (1.0 - n[k] * n[k]);
                    d_z[j] = dh[j] * (n[k] - hp[j]) * z[k] * (1.0 - z[k]);
                    dh_prev[j] = dh[j] * (1.0 - z[k]);
                    rh[j] = r[k] * hp[j];
                }
                d_rh.fill(0.0);
                affine_back(candidate, gn, &d_n, x, &rh, &mut d_rh);
                for j in 0..nh {
                    let k = s + j;
                    d_r[j] = d_rh[j] * hp[j] * r[k] * (1.0 - r[k]);
                    dh_prev[j] += d_rh[j] * r[k];
                }
                affine_back(update, gz, &d_z, x, hp, &mut dh_prev);
                affine_back(reset, gr, &d_r, x, hp, &mut dh_prev);
                std::mem::swap(&mut dh, &mut dh_prev);
            }
        }
        _ => {
            return Err(Error::Data(
                "gradient buffer does not match the model's cell kind".into(),
            ))
        }
    }
    Ok(())
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Logistic => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Logistic => y * (1.0 - y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqnet::CellKind;

    #[test]
    fn zero_params_rnn_stays_at_origin() {
        let p = ModelParams::zeros(CellKind::Rnn, 4, 1, Activation::Tanh);
        let f = forward(&p, &[0.3, 0.9, 0.1], None).unwrap();
        assert!(f.hidden_states().all(|h| h.iter().all(|&v| v == 0.0)));
        assert_eq!(f.logits, [0.0, 0.0]);
        assert_eq!(f.probs, [0.5, 0.5]);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let p = ModelParams::zeros(CellKind::Gru, 4, 1, Activation::Tanh);
        assert!(forward(&p, &[], None).is_err());
    }

    #[test]
    fn readout_bias_gradient_at_equal_logits() {
        let p = ModelParams::zeros(CellKind::Rnn, 3, 1, Activation::Tanh);
        let seq = [0.2, 0.4];
        let f = forward(&p, &seq, None).unwrap();
        let mut g = p.zeros_like();
        backward_into(&p, &seq, &f, true, None, 1.0, &mut g).unwrap();
        // Fall class is row 0: p - onehot(fall) = (0.5 - 1, 0.5 - 0).
        assert_eq!(g.b_out, vec![-0.5, 0.5]);
    }

    #[test]
    fn softmax_is_stable_and_normalized() {
        let p = softmax2([800.0, -800.0]);
        assert_eq!(p, [1.0, 0.0]);
        let q = softmax2([3f64.ln(), 0.0]);
        assert!((q[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn relu_derivative_is_a_step() {
        assert_eq!(Activation::Relu.derivative_from_output(0.0), 0.0);
        assert_eq!(Activation::Relu.derivative_from_output(0.3), 1.0);
    }
}
