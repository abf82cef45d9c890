use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Prediction, ScaleConfig};

/// The clinical rule: flag a patient once the current score reaches `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub theta: i32,
}

impl ThresholdModel {
    pub fn new(theta: i32, scale: &ScaleConfig) -> Result<Self> {
        if !scale.contains(theta) {
            return Err(Error::Config(format!(
                "threshold {theta} outside score range [{}, {}]",
                scale.s_min, scale.s_max
            )));
        }
        Ok(ThresholdModel { theta })
    }

    pub fn predict(&self, x_last: i32) -> Prediction {
        Prediction::hard(x_last >= self.theta)
    }
}
