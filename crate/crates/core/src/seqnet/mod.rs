//! Sequence-to-point recurrent classifiers.
//!
//! A one-layer RNN, LSTM or GRU reads the normalized score history up to
//! the prediction origin; a two-class softmax readout on the final hidden
//! state gives the fall probability. Training is minibatch BPTT with Adam,
//! per-epoch exponential learning-rate decay, dropout on the readout input
//! and early stopping on a validation split.

mod batch;
mod cell;
mod checkpoint;
mod gradcheck;
mod loss;
mod params;
mod train;

pub use batch::{make_batches, Batch, SeqExample};
pub use cell::{backward_into, forward, softmax2, ForwardPass};
pub use checkpoint::{Checkpoint, TensorRecord};
pub use gradcheck::{grad_check, numeric_gradient, relative_error, GradCheckReport};
pub use loss::{loss, PROB_CLIP};
pub use params::{Cell, Gate, Matrix, ModelParams, Tensor, TensorMut, FALL, NO_FALL};
pub use train::{
    backward, dropout_mask, evaluate_loss, examples_from, learning_rate, predict,
    predict_sequence, train, Adam, EarlyStopping, EpochRecord, Progress, TrainState,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Rnn,
    Lstm,
    Gru,
}

impl CellKind {
    pub const ALL: [CellKind; 3] = [CellKind::Rnn, CellKind::Lstm, CellKind::Gru];
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Rnn => "rnn",
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        })
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rnn" => Ok(CellKind::Rnn),
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::Config(format!("unknown cell kind {other:?}"))),
        }
    }
}

/// Nonlinearity of the plain RNN hidden update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    pub hidden_size: usize,
    pub layers: usize,
    pub lr0: f64,
    /// Per-epoch multiplicative decay of the learning rate.
    pub lr_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub dropout: f64,
    pub hidden_activation: Activation,
    pub forget_bias_init: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            hidden_size: 64,
            layers: 1,
            lr0: 0.1,
            lr_decay: 0.95,
            batch_size: 32,
            max_epochs: 200,
            patience: 5,
            dropout: 0.5,
            hidden_activation: Activation::Relu,
            forget_bias_init: 1.0,
            seed: 0,
        }
    }
}

impl HyperParams {
    /// Hidden sizes searched during tuning.
    pub const HIDDEN_GRID: [usize; 4] = [32, 64, 128, 256];
    pub const LR0_GRID: [f64; 2] = [0.1, 0.01];

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive".into());
        }
        if self.layers != 1 {
            return bad(format!("only single-layer networks are supported, got {}", self.layers));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad(format!("lr_decay must lie in (0, 1], got {}", self.lr_decay));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch_size, max_epochs and patience must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !self.forget_bias_init.is_finite() {
            return bad("forget_bias_init must be finite".into());
        }
        Ok(())
    }
}
