//! Central finite-difference check of the BPTT gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cell::forward;
use super::params::ModelParams;
use super::train::{backward, dropout_mask};
use super::{Activation, CellKind};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub kind: CellKind,
    pub hidden_size: usize,
    pub seq_len: usize,
    pub seed: u64,
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter entry with the largest error, as `tensor[index]`.
    pub worst: String,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

fn batch_loss(p: &ModelParams, seqs: &[&[f64]], labels: &[bool], masks: Option<&[Vec<f64>]>) -> Result<f64> {
    let mut total = 0.0;
    for (i, (s, &y)) in seqs.iter().zip(labels).enumerate() {
        let f = forward(p, s, masks.map(|m| m[i].as_slice()))?;
        // Unclipped: the oracle must see the exact function being differentiated.
        total -= if y { f.probs[0].ln() } else { f.probs[1].ln() };
    }
    Ok(total / seqs.len() as f64)
}

/// Central differences `(L(θ+ε) − L(θ−ε)) / 2ε` for every parameter entry.
pub fn numeric_gradient(
    p: &ModelParams,
    seqs: &[&[f64]],
    labels: &[bool],
    masks: Option<&[Vec<f64>]>,
    eps: f64,
) -> Result<ModelParams> {
    let mut probe = p.clone();
    let mut grad = p.zeros_like();
    let n_tensors = p.tensors().len();
    for t in 0..n_tensors {
        let len = p.tensors()[t].values.len();
        for i in 0..len {
            let orig = probe.tensors()[t].values[i];
            probe.tensors_mut()[t].values[i] = orig + eps;
            let up = batch_loss(&probe, seqs, labels, masks)?;
            probe.tensors_mut()[t].values[i] = orig - eps;
            let down = batch_loss(&probe, seqs, labels, masks)?;
            probe.tensors_mut()[t].values[i] = orig;
            grad.tensors_mut()[t].values[i] = (up - down) / (2.0 * eps);
        }
    }
    Ok(grad)
}

fn random_problem(kind: CellKind, hidden: usize, seq_len: usize, r: &mut StreamRng) -> (ModelParams, Vec<Vec<f64>>, Vec<bool>, Vec<Vec<f64>>) {
    let mut p = ModelParams::init(kind, hidden, 1, Activation::Tanh, 1.0, r);
    for (_, g) in p.cell.gates_mut() {
        for b in &mut g.bias {
            *b += r.random_range(-0.5..0.5);
        }
    }
    for b in &mut p.b_out {
        *b = r.random_range(-0.5..0.5);
    }
    let seqs: Vec<Vec<f64>> = (0..3)
        .map(|k| {
            let len = seq_len.saturating_sub(k * seq_len / 3).max(1);
            (0..len).map(|_| r.random::<f64>()).collect()
        })
        .collect();
    let labels = vec![true, false, r.random()];
    let masks = (0..3).map(|_| dropout_mask(hidden, 0.25, r)).collect();
    (p, seqs, labels, masks)
}

/// Compares analytic and numeric gradients on a small random problem
/// (tanh activation, three sequences, fixed dropout masks).
pub fn grad_check(kind: CellKind, hidden_size: usize, seq_len: usize, seed: u64) -> Result<GradCheckReport> {
    if hidden_size == 0 || seq_len == 0 {
        return Err(Error::Config("gradient check needs hidden_size and seq_len ≥ 1".into()));
    }
    let mut r = rng::stream(seed, rng::INIT, 0);
    let (p, seqs, labels, masks) = random_problem(kind, hidden_size, seq_len, &mut r);
    let views: Vec<&[f64]> = seqs.iter().map(Vec::as_slice).collect();
    let (analytic, _) = backward(&p, &views, &labels, Some(&masks))?;
    let numeric = numeric_gradient(&p, &views, &labels, Some(&masks), FD_STEP)?;

    let mut report = GradCheckReport {
        kind,
        hidden_size,
        seq_len,
        seed,
        checked: 0,
        max_rel_error: 0.0,
        worst: String::new(),
    };
    for (a, n) in analytic.tensors().iter().zip(numeric.tensors()) {
        for (i, (&ga, &gn)) in a.values.iter().zip(n.values).enumerate() {
            report.checked += 1;
            let e = relative_error(ga, gn);
            if e > report.max_rel_error || report.worst.is_empty() {
                report.max_rel_error = report.max_rel_error.max(e);
                report.worst = format!("{}[{i}]", a.name);
            }
        }
    }
    Ok(report)
}
