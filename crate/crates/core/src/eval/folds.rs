use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::series::Dataset;

/// One fold of the balanced protocol, as positions into the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub test: Vec<usize>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Fraction of the minority class drawn from each class into a test set,
/// and of each balanced training class held out for validation.
pub const HOLDOUT_FRACTION: f64 = 0.10;

fn tenth(n: usize) -> usize {
    (HOLDOUT_FRACTION * n as f64).floor() as usize
}

fn pick(pool: &[usize], n: usize, r: &mut rng::StreamRng) -> Vec<usize> {
    index::sample(r, pool.len(), n).into_iter().map(|i| pool[i]).collect()
}

/// Builds `k` folds. Each test set holds `n_t = floor(0.1 * min class)`
/// encounters of each class; fall-class test sets are disjoint across
/// folds while non-fall test sets are resampled per fold. Training takes
/// every remaining encounter of the smaller class plus an equal random
/// draw from the larger one, then holds out 10% per class for validation.
pub fn make_folds(d: &Dataset, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    let falls: Vec<usize> = (0..d.len()).filter(|&i| d.encounters[i].outcome).collect();
    let others: Vec<usize> = (0..d.len()).filter(|&i| !d.encounters[i].outcome).collect();
    if k == 0 {
        return Err(Error::Config("fold count must be positive".into()));
    }
    let n_t = tenth(falls.len().min(others.len()));
    if falls.len() < k || others.len() < k || n_t == 0 || n_t * k > falls.len() {
        return Err(Error::Data(format!(
            "{} fall / {} non-fall encounters cannot fill {k} balanced folds",
            falls.len(),
            others.len()
        )));
    }

    let mut order = falls.clone();
    order.shuffle(&mut rng::stream(seed, rng::FOLDS, 0));

    (0..k)
        .map(|f| {
            let mut r = rng::stream(seed, rng::FOLDS, 1 + f as u64);
            let test_falls = &order[f * n_t..(f + 1) * n_t];
            let test_others = pick(&others, n_t, &mut r);

            let rest_falls: Vec<usize> = falls.iter().copied().filter(|i| !test_falls.contains(i)).collect();
            let rest_others: Vec<usize> = {
                let mut taken = vec![false; d.len()];
                test_others.iter().for_each(|&i| taken[i] = true);
                others.iter().copied().filter(|&i| !taken[i]).collect()
            };
            let m = rest_falls.len().min(rest_others.len());
            let mut tf = pick(&rest_falls, m, &mut r);
            let mut to = pick(&rest_others, m, &mut r);
            tf.shuffle(&mut r);
            to.shuffle(&mut r);
            let v = tenth(m);

            let mut test: Vec<usize> = test_falls.to_vec();
            test.extend(&test_others);
            let mut validation: Vec<usize> = tf[..v].to_vec();
            validation.extend(&to[..v]);
            let mut train: Vec<usize> = tf[v..].to_vec();
            train.extend(&to[v..]);
            Ok(FoldSplit {
                fold_index: f,
                test,
                train,
                validation,
            })
        })
        .collect()
}
