//! Axis-threshold trees over a single scalar feature.
//!
//! With one feature, every split of a node sorted by `x` is a prefix/suffix
//! cut, so the whole tree is grown over one sorted slice without re-sorting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    /// Queries `x <= threshold` go left.
    pub fn eval(&self, x: f64) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    threshold,
                    left,
                    right,
                } => node = if x <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<f64> {
        match self {
            Node::Leaf { value } => vec![*value],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Criterion {
    /// Binary targets in {0, 1}; leaves hold the positive fraction.
    Gini,
    /// First-order boosting on residuals with L2 shrinkage of leaf values.
    Gradient { l2: f64 },
}

impl Criterion {
    fn leaf(self, sum: f64, n: f64) -> f64 {
        match self {
            Criterion::Gini => sum / n,
            Criterion::Gradient { l2 } => sum / (n + l2),
        }
    }

    /// Node score; a split's gain is `score(left) + score(right) - score(parent)`.
    fn score(self, sum: f64, n: f64) -> f64 {
        match self {
            // Negated n * Gini impurity, n * 2p(1 - p).
            Criterion::Gini => -2.0 * sum * (n - sum) / n,
            Criterion::Gradient { l2 } => sum * sum / (n + l2),
        }
    }
}

const MIN_GAIN: f64 = 1e-12;

/// Grows a tree on `samples` of `(x, target)`. The slice is sorted in place.
pub(crate) fn grow(samples: &mut [(f64, f64)], max_depth: usize, criterion: Criterion) -> Node {
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    grow_sorted(samples, max_depth, criterion)
}

fn grow_sorted(samples: &[(f64, f64)], depth_left: usize, criterion: Criterion) -> Node {
    let n = samples.len() as f64;
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let leaf = Node::Leaf {
        value: criterion.leaf(total, n),
    };
    if depth_left == 0 || samples.len() < 2 {
        return leaf;
    }
    if matches!(criterion, Criterion::Gini) && (total == 0.0 || total == n) {
        return leaf;
    }

    let parent = criterion.score(total, n);
    let mut best: Option<(usize, f64)> = None;
    let mut left_sum = 0.0;
    for i in 1..samples.len() {
        left_sum += samples[i - 1].1;
        if samples[i].0 == samples[i - 1].0 {
            continue;
        }
        let nl = i as f64;
        let gain = criterion.score(left_sum, nl) + criterion.score(total - left_sum, n - nl) - parent;
        if gain > MIN_GAIN && best.is_none_or(|(_, g)| gain > g) {
            best = Some((i, gain));
        }
    }

    match best {
        None => leaf,
        Some((i, _)) => Node::Split {
            threshold: 0.5 * (samples[i - 1].0 + samples[i].0),
            left: Box::new(grow_sorted(&samples[..i], depth_left - 1, criterion)),
            right: Box::new(grow_sorted(&samples[i..], depth_left - 1, criterion)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive midpoint search, scoring each candidate by weighted Gini
    /// impurity computed from scratch.
    fn brute_force_stump(samples: &[(f64, f64)]) -> f64 {
        let gini = |s: &[&(f64, f64)]| {
            if s.is_empty() {
                return 0.0;
            }
            let p = s.iter().filter(|v| v.1 == 1.0).count() as f64 / s.len() as f64;
            s.len() as f64 * (1.0 - p * p - (1.0 - p) * (1.0 - p))
        };
        let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut best = (f64::INFINITY, f64::NAN);
        for w in xs.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let l: Vec<_> = samples.iter().filter(|s| s.0 <= t).collect();
            let r: Vec<_> = samples.iter().filter(|s| s.0 > t).collect();
            let imp = gini(&l) + gini(&r);
            if imp < best.0 - 1e-12 {
                best = (imp, t);
            }
        }
        best.1
    }

    #[test]
    fn stump_matches_exhaustive_search() {
        let cases: Vec<Vec<(f64, f64)>> = vec![
            (1..=10).map(|x| (x as f64, 0.0)).chain((21..=30).map(|x| (x as f64, 1.0))).collect(),
            vec![(1.0, 0.0), (2.0, 1.0), (3.0, 0.0), (4.0, 1.0), (5.0, 1.0), (6.0, 1.0)],
            vec![(3.0, 1.0), (3.0, 0.0), (7.0, 1.0), (1.0, 0.0), (9.0, 1.0), (2.0, 0.0), (2.0, 1.0)],
        ];
        for case in cases {
            let expected = brute_force_stump(&case);
            let mut s = case.clone();
            match grow(&mut s, 1, Criterion::Gini) {
                Node::Split { threshold, .. } => assert_eq!(threshold, expected, "{case:?}"),
                leaf => panic!("expected a split, got {leaf:?}"),
            }
        }
    }

    #[test]
    fn constant_feature_gives_a_single_leaf() {
        let mut s = vec![(4.0, 1.0), (4.0, 0.0), (4.0, 0.0), (4.0, 1.0)];
        assert_eq!(grow(&mut s, 10, Criterion::Gini), Node::Leaf { value: 0.5 });
    }

    #[test]
    fn depth_is_bounded() {
        let mut s: Vec<_> = (0..64).map(|i| (i as f64, (i % 2) as f64)).collect();
        let t = grow(&mut s, 3, Criterion::Gini);
        assert!(t.depth() <= 3);
        for v in t.leaves() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn gradient_leaves_are_shrunk_means() {
        let mut s = vec![(1.0, -0.5), (2.0, -0.5), (3.0, 0.5), (4.0, 0.5)];
        let t = grow(&mut s, 1, Criterion::Gradient { l2: 1.0 });
        assert_eq!(t.eval(0.0), -1.0 / 3.0);
        assert_eq!(t.eval(10.0), 1.0 / 3.0);
    }
}
