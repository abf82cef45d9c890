use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Criterion, Node};
use crate::error::{Error, Result};
use crate::rng;
use crate::series::Prediction;

/// First-order gradient boosting on the logistic loss: each stage is a
/// small regression tree fit to the residuals `y - sigmoid(F)`, with leaf
/// values `sum(r) / (n + l2_reg)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub init_logit: f64,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub max_depth: usize,
    pub subsample: f64,
    pub stages: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbtParams {
    pub stage_count: usize,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub max_depth: usize,
    /// Row fraction drawn without replacement per stage.
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            stage_count: 300,
            learning_rate: 0.1,
            l2_reg: 1.0,
            max_depth: 1,
            subsample: 1.0,
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl GbtModel {
    pub fn fit(pairs: &[(i32, bool)], params: GbtParams, seed: u64) -> Result<Self> {
        let pos = pairs.iter().filter(|p| p.1).count();
        if pos == 0 || pos == pairs.len() {
            return Err(Error::Data(
                "gradient boosting needs both classes in the training pairs".into(),
            ));
        }
        if !(params.learning_rate >= 0.0 && params.l2_reg >= 0.0)
            || !(params.subsample > 0.0 && params.subsample <= 1.0)
        {
            return Err(Error::Config(format!("invalid boosting parameters {params:?}")));
        }
        let prior = pos as f64 / pairs.len() as f64;
        let init_logit = (prior / (1.0 - prior)).ln();
        let xs: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| if p.1 { 1.0 } else { 0.0 }).collect();
        let mut logits = vec![init_logit; pairs.len()];
        let rows = ((params.subsample * pairs.len() as f64).round() as usize).max(1);

        let mut stages = Vec::with_capacity(params.stage_count);
        for s in 0..params.stage_count {
            let mut sample_rows: Vec<(f64, f64)> = if rows == pairs.len() {
                (0..pairs.len()).map(|i| (xs[i], ys[i] - sigmoid(logits[i]))).collect()
            } else {
                let mut r = rng::stream(seed, rng::SAMPLING, s as u64);
                sample(&mut r, pairs.len(), rows)
                    .into_iter()
                    .map(|i| (xs[i], ys[i] - sigmoid(logits[i])))
                    .collect()
            };
            let tree = grow(
                &mut sample_rows,
                params.max_depth,
                Criterion::Gradient { l2: params.l2_reg },
            );
            for (f, &x) in logits.iter_mut().zip(&xs) {
                *f += params.learning_rate * tree.eval(x);
            }
            stages.push(tree);
        }
        Ok(GbtModel {
            init_logit,
            learning_rate: params.learning_rate,
            l2_reg: params.l2_reg,
            max_depth: params.max_depth,
            subsample: params.subsample,
            stages,
        })
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn logit(&self, x_last: i32) -> f64 {
        let x = f64::from(x_last);
        self.init_logit + self.learning_rate * self.stages.iter().map(|t| t.eval(x)).sum::<f64>()
    }

    pub fn predict(&self, x_last: i32) -> Prediction {
        Prediction::from_prob(sigmoid(self.logit(x_last)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Vec<(i32, bool)> {
        (1..=10).map(|x| (x, false)).chain((21..=30).map(|x| (x, true))).collect()
    }

    #[test]
    fn zero_stages_predict_the_prior() {
        let pairs: Vec<_> = (0..20).map(|i| (i, i < 5)).collect();
        let m = GbtModel::fit(&pairs, GbtParams { stage_count: 0, ..Default::default() }, 0).unwrap();
        assert!((m.predict(3).prob_fall - 0.25).abs() < 1e-12);
        assert_eq!(m.init_logit, (0.25f64 / 0.75).ln());
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let pairs = separable();
        let params = GbtParams { stage_count: 50, learning_rate: 0.1, ..Default::default() };
        let m = GbtModel::fit(&pairs, params, 0).unwrap();
        assert_eq!(m.stage_count(), 50);
        for &(x, y) in &pairs {
            assert_eq!(m.predict(x).label, y, "x = {x}");
        }
    }

    #[test]
    fn zero_learning_rate_is_constant() {
        let pairs: Vec<_> = (0..30).map(|i| (i, i % 3 == 0)).collect();
        let params = GbtParams { stage_count: 20, learning_rate: 0.0, ..Default::default() };
        let m = GbtModel::fit(&pairs, params, 0).unwrap();
        let p0 = m.predict(0).prob_fall;
        assert!((0..=30).all(|x| m.predict(x).prob_fall == p0));
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(GbtModel::fit(&[(1, false), (2, false)], GbtParams::default(), 0).is_err());
    }

    #[test]
    fn probabilities_stay_in_unit_interval() {
        let pairs: Vec<_> = (0..200).map(|i| (i % 31, (i * 7) % 5 < 2)).collect();
        let params = GbtParams { stage_count: 100, max_depth: 3, subsample: 0.7, ..Default::default() };
        let m = GbtModel::fit(&pairs, params, 5).unwrap();
        for x in -10..=40 {
            let p = m.predict(x).prob_fall;
            assert!((0.0..=1.0).contains(&p) && m.logit(x).is_finite());
        }
    }
}
