//! One-step-ahead predictors: the clinical threshold rule and three scalar
//! classifiers that map the most recent score to the next-step fall label.

mod forest;
mod gbt;
mod knn;
mod threshold;
pub(crate) mod tree;

pub use forest::ForestModel;
pub use gbt::{GbtModel, GbtParams};
pub use knn::{KnnModel, Pair};
pub use threshold::ThresholdModel;
pub use tree::Node;

pub(crate) use gbt::sigmoid;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::series::Prediction;

/// A fitted baseline, tagged by kind for persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineModel {
    Threshold(ThresholdModel),
    Knn(KnnModel),
    Forest(ForestModel),
    Gbt(GbtModel),
}

impl BaselineModel {
    pub fn predict(&self, x_last: i32) -> Prediction {
        match self {
            BaselineModel::Threshold(m) => m.predict(x_last),
            BaselineModel::Knn(m) => m.predict(x_last),
            BaselineModel::Forest(m) => m.predict(x_last),
            BaselineModel::Gbt(m) => m.predict(x_last),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
