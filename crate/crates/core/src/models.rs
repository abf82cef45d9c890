//! Every predictor behind one serializable spec, so experiments can list
//! the models they compare and train each one per fold.

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineModel, ForestModel, GbtModel, GbtParams, KnnModel, ThresholdModel};
use crate::error::{Error, Result};
use crate::eval::{Classifier, FoldData, ModelFactory};
use crate::seqnet::{self, CellKind, EpochRecord, HyperParams, ModelParams};
use crate::series::{Encounter, Prediction, ScaleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub theta: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnSpec {
    pub k: usize,
}

impl Default for KnnSpec {
    fn default() -> Self {
        KnnSpec { k: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSpec {
    pub tree_count: usize,
    pub max_depth: usize,
}

impl Default for ForestSpec {
    fn default() -> Self {
        ForestSpec {
            tree_count: ForestModel::DEFAULT_TREES,
            max_depth: ForestModel::DEFAULT_DEPTH,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecurrentSpec {
    pub hyper: HyperParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Threshold(ThresholdSpec),
    Knn(KnnSpec),
    Forest(ForestSpec),
    Gbt(GbtParams),
    Rnn(RecurrentSpec),
    Lstm(RecurrentSpec),
    Gru(RecurrentSpec),
}

impl ModelSpec {
    pub fn threshold(theta: i32) -> Self {
        ModelSpec::Threshold(ThresholdSpec { theta })
    }

    pub fn recurrent(kind: CellKind, hyper: HyperParams) -> Self {
        let spec = RecurrentSpec { hyper };
        match kind {
            CellKind::Rnn => ModelSpec::Rnn(spec),
            CellKind::Lstm => ModelSpec::Lstm(spec),
            CellKind::Gru => ModelSpec::Gru(spec),
        }
    }

    /// The models compared by default: both clinical thresholds, the
    /// scalar classifiers and the three recurrent cells.
    pub fn default_suite() -> Vec<ModelSpec> {
        let mut v = vec![
            ModelSpec::threshold(7),
            ModelSpec::threshold(20),
            ModelSpec::Knn(KnnSpec::default()),
            ModelSpec::Forest(ForestSpec::default()),
            ModelSpec::Gbt(GbtParams::default()),
        ];
        v.extend(CellKind::ALL.map(|k| ModelSpec::recurrent(k, HyperParams::default())));
        v
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Threshold(t) => format!("hds-{}", t.theta),
            ModelSpec::Knn(_) => "knn".into(),
            ModelSpec::Forest(_) => "forest".into(),
            ModelSpec::Gbt(_) => "gbt".into(),
            ModelSpec::Rnn(_) => "rnn".into(),
            ModelSpec::Lstm(_) => "lstm".into(),
            ModelSpec::Gru(_) => "gru".into(),
        }
    }

    fn recurrent_parts(&self) -> Option<(CellKind, &HyperParams)> {
        match self {
            ModelSpec::Rnn(s) => Some((CellKind::Rnn, &s.hyper)),
            ModelSpec::Lstm(s) => Some((CellKind::Lstm, &s.hyper)),
            ModelSpec::Gru(s) => Some((CellKind::Gru, &s.hyper)),
            _ => None,
        }
    }

    pub fn check(&self, scale: &ScaleConfig) -> Result<()> {
        match self {
            ModelSpec::Threshold(t) => ThresholdModel::new(t.theta, scale).map(|_| ()),
            ModelSpec::Knn(k) if k.k == 0 => Err(Error::Config("knn k must be positive".into())),
            ModelSpec::Forest(f) if f.tree_count == 0 => Err(Error::Config("forest needs at least one tree".into())),
            _ => match self.recurrent_parts() {
                Some((_, h)) => h.check(),
                None => Ok(()),
            },
        }
    }

    /// Trains the model on one fold's training material.
    pub fn fit_model(&self, data: &FoldData<'_>, seed: u64) -> Result<FittedModel> {
        let pairs = || {
            data.train
                .iter()
                .map(|e| Ok((e.last_score()?, e.outcome)))
                .collect::<Result<Vec<_>>>()
        };
        let baseline = match self {
            ModelSpec::Threshold(t) => Some(BaselineModel::Threshold(ThresholdModel::new(t.theta, data.scale)?)),
            ModelSpec::Knn(k) => Some(BaselineModel::Knn(KnnModel::fit(&pairs()?, k.k)?)),
            ModelSpec::Forest(f) => Some(BaselineModel::Forest(ForestModel::fit(
                &pairs()?,
                f.tree_count,
                f.max_depth,
                seed,
            )?)),
            ModelSpec::Gbt(g) => Some(BaselineModel::Gbt(GbtModel::fit(&pairs()?, *g, seed)?)),
            _ => None,
        };
        if let Some(model) = baseline {
            return Ok(FittedModel::Baseline(model));
        }
        let (kind, hyper) = self.recurrent_parts().expect("recurrent spec");
        let hyper = HyperParams {
            seed,
            ..hyper.clone()
        };
        let train = seqnet::examples_from(data.train.iter().copied(), data.scale);
        let val = seqnet::examples_from(data.validation.iter().copied(), data.scale);
        let (params, state) = seqnet::train(kind, &train, &val, &hyper)?;
        Ok(FittedModel::Recurrent {
            params,
            hyper,
            history: state.history,
            scale: *data.scale,
        })
    }
}

pub enum FittedModel {
    Baseline(BaselineModel),
    Recurrent {
        params: ModelParams,
        hyper: HyperParams,
        history: Vec<EpochRecord>,
        scale: ScaleConfig,
    },
}

impl Classifier for FittedModel {
    fn predict(&self, e: &Encounter) -> Result<Prediction> {
        match self {
            FittedModel::Baseline(m) => Ok(m.predict(e.last_score()?)),
            FittedModel::Recurrent { params, scale, .. } => seqnet::predict(params, e, scale),
        }
    }
}

impl ModelFactory for ModelSpec {
    fn name(&self) -> String {
        self.label()
    }

    fn fit(&self, data: &FoldData<'_>, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(self.fit_model(data, seed)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_parse_with_defaults_and_reject_unknown_keys() {
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"threshold","theta":20}"#).unwrap();
        assert_eq!(s, ModelSpec::threshold(20));
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"knn"}"#).unwrap();
        assert_eq!(s, ModelSpec::Knn(KnnSpec { k: 1 }));
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"gru","hyper":{"hidden_size":32}}"#).unwrap();
        assert_eq!(s.label(), "gru");
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"forest","trees":3}"#).is_err());
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"svm"}"#).is_err());
        for spec in ModelSpec::default_suite() {
            let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn threshold_outside_scale_is_a_config_error() {
        let err = ModelSpec::threshold(40).check(&ScaleConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn every_spec_fits_and_predicts() {
        let scale = ScaleConfig::default();
        let enc: Vec<Encounter> = (0..40)
            .map(|i| {
                let fall = i % 2 == 0;
                let scores: Vec<i32> = (0..6).map(|t| if fall { 5 + 3 * t } else { 8 }).collect();
                Encounter::new(format!("e{i}"), scores, fall, 6)
            })
            .collect();
        let data = FoldData {
            scale: &scale,
            train: enc.iter().collect(),
            validation: enc.iter().take(8).collect(),
        };
        let mut suite = ModelSpec::default_suite();
        for s in &mut suite {
            if let ModelSpec::Rnn(r) | ModelSpec::Lstm(r) | ModelSpec::Gru(r) = s {
                r.hyper.hidden_size = 8;
                r.hyper.max_epochs = 3;
            }
            if let ModelSpec::Forest(f) = s {
                f.tree_count = 10;
            }
        }
        for s in suite {
            let m = s.fit(&data, 1).unwrap();
            let p = m.predict(&enc[0]).unwrap();
            assert!((0.0..=1.0).contains(&p.prob_fall), "{}", s.label());
        }
    }
}
