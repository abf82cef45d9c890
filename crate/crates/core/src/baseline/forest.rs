use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Criterion, Node};
use crate::error::{Error, Result};
use crate::rng;
use crate::series::Prediction;

/// Bagged Gini trees on the scalar score. Per-tree feature subsampling is
/// a no-op with a single feature, so the only randomness is the bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub tree_count: usize,
    pub max_depth: usize,
    pub trees: Vec<Node>,
}

impl ForestModel {
    pub const DEFAULT_TREES: usize = 300;
    pub const DEFAULT_DEPTH: usize = 10;

    pub fn fit(pairs: &[(i32, bool)], tree_count: usize, max_depth: usize, seed: u64) -> Result<Self> {
        if !pairs.iter().any(|p| p.1) || !pairs.iter().any(|p| !p.1) {
            return Err(Error::Data(
                "random forest needs both classes in the training pairs".into(),
            ));
        }
        if tree_count == 0 {
            return Err(Error::Config("tree_count must be positive".into()));
        }
        let n = pairs.len();
        let trees = (0..tree_count)
            .map(|t| {
                let mut r = rng::stream(seed, rng::BOOTSTRAP, t as u64);
                let mut sample: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        let (x, y) = pairs[r.random_range(0..n)];
                        (f64::from(x), if y { 1.0 } else { 0.0 })
                    })
                    .collect();
                grow(&mut sample, max_depth, Criterion::Gini)
            })
            .collect();
        Ok(ForestModel {
            tree_count,
            max_depth,
            trees,
        })
    }

    pub fn predict(&self, x_last: i32) -> Prediction {
        let x = f64::from(x_last);
        let p = self.trees.iter().map(|t| t.eval(x)).sum::<f64>() / self.trees.len() as f64;
        Prediction::from_prob(p.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Vec<(i32, bool)> {
        (1..=10).map(|x| (x, false)).chain((21..=30).map(|x| (x, true))).collect()
    }

    #[test]
    fn single_stump_splits_the_gap() {
        let m = ForestModel::fit(&separable(), 1, 1, 3).unwrap();
        match &m.trees[0] {
            Node::Split { threshold, .. } => assert!(*threshold > 10.0 && *threshold <= 21.0),
            leaf => panic!("expected split, got {leaf:?}"),
        }
        assert!(m.predict(25).label);
        assert!(!m.predict(5).label);
    }

    #[test]
    fn query_below_range_reads_leftmost_leaf() {
        let m = ForestModel::fit(&separable(), 1, 1, 3).unwrap();
        let leftmost = m.trees[0].leaves()[0];
        assert_eq!(m.predict(-100).prob_fall, leftmost);
        assert_eq!(leftmost, 0.0);
    }

    #[test]
    fn identical_features_give_prior() {
        let pairs: Vec<_> = (0..40).map(|i| (12, i % 4 == 0)).collect();
        let m = ForestModel::fit(&pairs, 200, 10, 11).unwrap();
        assert!(m.trees.iter().all(|t| matches!(t, Node::Leaf { .. })));
        // Each leaf is its bootstrap's prior; the average tracks the true prior.
        assert!((m.predict(12).prob_fall - 0.25).abs() < 0.03);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(ForestModel::fit(&[(1, true), (2, true)], 3, 2, 0).is_err());
    }

    #[test]
    fn training_accuracy_on_separable_data() {
        let pairs = separable();
        let m = ForestModel::fit(&pairs, 25, 10, 1).unwrap();
        for &(x, y) in &pairs {
            let p = m.predict(x);
            assert_eq!(p.label, y);
            assert!((0.0..=1.0).contains(&p.prob_fall));
        }
    }

    #[test]
    fn fit_is_deterministic_under_seed() {
        let pairs: Vec<_> = (0..60).map(|i| (i % 31, i % 3 == 0)).collect();
        let a = ForestModel::fit(&pairs, 10, 4, 9).unwrap();
        let b = ForestModel::fit(&pairs, 10, 4, 9).unwrap();
        assert_eq!(a, b);
    }
}
