use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::train::EpochRecord;
use super::{Activation, CellKind, HyperParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "hds-fallcast/seqnet/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

/// Trained network on disk. Values are written in shortest round-trip
/// decimal form and parsed with correct rounding, so a save/load cycle
/// reproduces every bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub kind: CellKind,
    pub activation: Activation,
    pub hidden_size: usize,
    pub input_size: usize,
    pub hyper: HyperParams,
    pub tensors: Vec<TensorRecord>,
    pub history: Vec<EpochRecord>,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, hyper: &HyperParams, history: &[EpochRecord]) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            kind: params.kind(),
            activation: params.activation,
            hidden_size: params.hidden_size(),
            input_size: params.input_size(),
            hyper: hyper.clone(),
            tensors: params
                .tensors()
                .into_iter()
                .map(|t| TensorRecord {
                    name: t.name,
                    shape: [t.shape.0, t.shape.1],
                    values: t.values.to_vec(),
                })
                .collect(),
            history: history.to_vec(),
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!("unsupported checkpoint format {:?}", self.format)));
        }
        let mut p = ModelParams::zeros(self.kind, self.hidden_size, self.input_size, self.activation);
        let slots = p.tensors_mut();
        if slots.len() != self.tensors.len() {
            return Err(Error::Data(format!(
                "checkpoint has {} tensors, a {} network has {}",
                self.tensors.len(),
                self.kind,
                slots.len()
            )));
        }
        for (slot, rec) in slots.into_iter().zip(&self.tensors) {
            if slot.name != rec.name || [slot.shape.0, slot.shape.1] != rec.shape || rec.values.len() != slot.values.len() {
                return Err(Error::Data(format!(
                    "tensor {} {:?} does not fit slot {} {:?}",
                    rec.name, rec.shape, slot.name, slot.shape
                )));
            }
            slot.values.copy_from_slice(&rec.values);
        }
        if !p.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters".into()));
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn save_load_is_bit_exact(seed in any::<u64>(), kind_ix in 0usize..3, bits in proptest::collection::vec(any::<u64>(), 8)) {
            let kind = CellKind::ALL[kind_ix];
            let mut r = rng::stream(seed, rng::INIT, 0);
            let mut p = ModelParams::init(kind, 3, 1, Activation::Relu, 1.0, &mut r);
            // Splice in arbitrary finite bit patterns, subnormals included.
            for (slot, b) in p.w_out.data.iter_mut().zip(&bits) {
                let v = f64::from_bits(*b);
                if v.is_finite() { *slot = v; }
            }
            let hist = vec![EpochRecord { epoch: 0, learning_rate: 0.1, train_loss: 0.1 + 0.2, val_loss: 1.0 / 3.0, improved: true }];
            let ck = Checkpoint::new(&p, &HyperParams { seed, ..Default::default() }, &hist);
            let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
            prop_assert_eq!(&back, &ck);
            let q = back.params().unwrap();
            for (a, b) in p.tensors().iter().zip(q.tensors()) {
                for (x, y) in a.values.iter().zip(b.values) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let p = ModelParams::zeros(CellKind::Gru, 4, 1, Activation::Tanh);
        let mut ck = Checkpoint::new(&p, &HyperParams::default(), &[]);
        ck.hidden_size = 5;
        assert!(ck.params().is_err());
        let mut ck = Checkpoint::new(&p, &HyperParams::default(), &[]);
        ck.kind = CellKind::Lstm;
        assert!(ck.params().is_err());
    }
}
