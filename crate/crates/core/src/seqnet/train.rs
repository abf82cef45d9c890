use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batch::{make_batches, SeqExample};
use super::cell::{backward_into, forward, softmax2};
use super::loss::PROB_CLIP;
use super::params::{ModelParams, FALL};
use super::{CellKind, HyperParams};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::series::{derive_sequence, Encounter, Prediction, ScaleConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainState {
    pub first_moment: ModelParams,
    pub second_moment: ModelParams,
    pub step: u64,
    pub epoch: usize,
    pub best_val_loss: f64,
    pub epochs_since_improvement: usize,
    pub history: Vec<EpochRecord>,
}

impl TrainState {
    fn new(p: &ModelParams) -> Self {
        TrainState {
            first_moment: p.zeros_like(),
            second_moment: p.zeros_like(),
            step: 0,
            epoch: 0,
            best_val_loss: f64::INFINITY,
            epochs_since_improvement: 0,
            history: Vec::new(),
        }
    }
}

impl Adam {
    /// One bias-corrected Adam update of `p` with gradient `g`.
    pub fn step(&self, p: &mut ModelParams, g: &ModelParams, state: &mut TrainState, lr: f64) {
        state.step += 1;
        let t = state.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let params = p.tensors_mut();
        let grads = g.tensors();
        let ms = state.first_moment.tensors_mut();
        let vs = state.second_moment.tensors_mut();
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(ms).zip(vs) {
            for i in 0..p.values.len() {
                let gi = g.values[i];
                m.values[i] = self.beta1 * m.values[i] + (1.0 - self.beta1) * gi;
                v.values[i] = self.beta2 * v.values[i] + (1.0 - self.beta2) * gi * gi;
                let mh = m.values[i] / c1;
                let vh = v.values[i] / c2;
                p.values[i] -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Improved,
    Stalled,
    Stop,
}

/// Patience-based stopping on a strictly decreasing validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub since: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            since: 0,
        }
    }

    pub fn observe(&mut self, val_loss: f64) -> Progress {
        if val_loss < self.best {
            self.best = val_loss;
            self.since = 0;
            Progress::Improved
        } else {
            self.since += 1;
            if self.since >= self.patience {
                Progress::Stop
            } else {
                Progress::Stalled
            }
        }
    }
}

pub fn learning_rate(h: &HyperParams, epoch: usize) -> f64 {
    h.lr0 * h.lr_decay.powi(epoch as i32)
}

/// Inverted-dropout mask: each unit kept with probability `1 - rate` and
/// scaled by `1 / (1 - rate)`.
pub fn dropout_mask(hidden: usize, rate: f64, rng: &mut StreamRng) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..hidden)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

fn sample_loss(prob_fall: f64, label: bool) -> f64 {
    let p = prob_fall.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Gradient of the mean batch loss, and that loss.
pub fn backward(
    p: &ModelParams,
    seqs: &[&[f64]],
    labels: &[bool],
    masks: Option<&[Vec<f64>]>,
) -> Result<(ModelParams, f64)> {
    if seqs.len() != labels.len() || masks.is_some_and(|m| m.len() != seqs.len()) {
        return Err(Error::Data("batch sequences, labels and masks differ in length".into()));
    }
    let mut grads = p.zeros_like();
    if seqs.is_empty() {
        return Ok((grads, 0.0));
    }
    let w = 1.0 / seqs.len() as f64;
    let mut total = 0.0;
    for (i, (seq, &y)) in seqs.iter().zip(labels).enumerate() {
        let mask = masks.map(|m| m[i].as_slice());
        let f = forward(p, seq, mask)?;
        total += sample_loss(f.prob_fall(), y);
        backward_into(p, seq, &f, y, mask, w, &mut grads)?;
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok((grads, total * w))
}

/// Mean loss over `examples` without dropout.
pub fn evaluate_loss(p: &ModelParams, examples: &[SeqExample]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for e in examples {
        total += sample_loss(forward(p, &e.values, None)?.prob_fall(), e.label);
    }
    Ok(total / examples.len() as f64)
}

pub fn examples_from<'a>(
    encounters: impl IntoIterator<Item = &'a Encounter>,
    scale: &ScaleConfig,
) -> Vec<SeqExample> {
    encounters
        .into_iter()
        .map(|e| SeqExample {
            values: derive_sequence(e, scale),
            label: e.outcome,
        })
        .collect()
}

/// Trains a fresh network and returns the parameters with the lowest
/// validation loss seen.
pub fn train(
    kind: CellKind,
    train_set: &[SeqExample],
    val_set: &[SeqExample],
    h: &HyperParams,
) -> Result<(ModelParams, TrainState)> {
    h.check()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Data("training and validation splits must be non-empty".into()));
    }
    let mut init_rng = rng::stream(h.seed, rng::INIT, 0);
    let mut params = ModelParams::init(
        kind,
        h.hidden_size,
        1,
        h.hidden_activation,
        h.forget_bias_init,
        &mut init_rng,
    );
    let adam = Adam::default();
    let mut state = TrainState::new(&params);
    let mut stopper = EarlyStopping::new(h.patience);
    let mut best = params.clone();

    for epoch in 0..h.max_epochs {
        let lr = learning_rate(h, epoch);
        let mut sampling = rng::stream(h.seed, rng::SAMPLING, epoch as u64);
        let mut dropping = rng::stream(h.seed, rng::DROPOUT, epoch as u64);
        let diverged = |_| Error::Divergence {
            epoch,
            loss: f64::NAN,
        };

        let mut epoch_loss = 0.0;
        for batch in make_batches(train_set, h.batch_size, Some(&mut sampling)) {
            let rows: Vec<&[f64]> = (0..batch.len()).map(|r| batch.row(r)).collect();
            let masks: Option<Vec<Vec<f64>>> = (h.dropout > 0.0).then(|| {
                (0..batch.len())
                    .map(|_| dropout_mask(h.hidden_size, h.dropout, &mut dropping))
                    .collect()
            });
            let (grads, batch_loss) =
                backward(&params, &rows, &batch.labels, masks.as_deref()).map_err(diverged)?;
            epoch_loss += batch_loss * batch.len() as f64;
            adam.step(&mut params, &grads, &mut state, lr);
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = evaluate_loss(&params, val_set).map_err(diverged)?;
        if !train_loss.is_finite() || !val_loss.is_finite() || !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: if train_loss.is_finite() { val_loss } else { train_loss },
            });
        }

        let progress = stopper.observe(val_loss);
        if progress == Progress::Improved {
            best = params.clone();
        }
        state.epoch = epoch + 1;
        state.best_val_loss = stopper.best;
        state.epochs_since_improvement = stopper.since;
        state.history.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss,
            val_loss,
            improved: progress == Progress::Improved,
        });
        if progress == Progress::Stop {
            break;
        }
    }
    Ok((best, state))
}

pub fn predict_sequence(p: &ModelParams, seq: &[f64]) -> Result<Prediction> {
    Ok(prediction_from_logits(forward(p, seq, None)?.logits))
}

pub fn predict(p: &ModelParams, e: &Encounter, scale: &ScaleConfig) -> Result<Prediction> {
    predict_sequence(p, &derive_sequence(e, scale))
}

/// Argmax prediction straight from readout logits.
fn prediction_from_logits(logits: [f64; 2]) -> Prediction {
    Prediction::from_prob(softmax2(logits)[FALL])
}
