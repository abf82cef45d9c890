use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub x: i32,
    pub y: bool,
}

/// k-nearest neighbours on the scalar score. Distance ties and vote ties
/// both resolve toward the fall class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub pairs: Vec<Pair>,
}

impl KnnModel {
    pub fn fit(pairs: &[(i32, bool)], k: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Data("k-NN needs at least one training pair".into()));
        }
        if k == 0 || k > pairs.len() {
            return Err(Error::Config(format!(
                "k = {k} must lie in 1..={}",
                pairs.len()
            )));
        }
        Ok(KnnModel {
            k,
            pairs: pairs.iter().map(|&(x, y)| Pair { x, y }).collect(),
        })
    }

    pub fn predict(&self, x_last: i32) -> Prediction {
        self.predict_with(x_last, f64::from)
    }

    /// Prediction after mapping every feature through `feature`.
    pub(crate) fn predict_with(&self, query: i32, feature: impl Fn(i32) -> f64) -> Prediction {
        let q = feature(query);
        let mut ranked: Vec<(f64, bool)> = self
            .pairs
            .iter()
            .map(|p| ((feature(p.x) - q).abs(), p.y))
            .collect();
        // Equal distances order fall labels first.
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let votes = ranked[..self.k].iter().filter(|r| r.1).count();
        Prediction {
            label: 2 * votes >= self.k,
            prob_fall: votes as f64 / self.k as f64,
        }
    }
}
