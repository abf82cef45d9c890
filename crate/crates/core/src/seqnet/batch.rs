use rand::seq::SliceRandom;

use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq)]
pub struct SeqExample {
    pub values: Vec<f64>,
    pub label: bool,
}

/// Sequences left-padded to a common width. `mask[i * width + t]` marks
/// real steps; since padding sits on the left, every row's true final step
/// is the last column.
#[derive(Debug, Clone)]
pub struct Batch {
    pub width: usize,
    pub padded: Vec<f64>,
    pub mask: Vec<bool>,
    pub labels: Vec<bool>,
    /// Positions of the rows in the source example list.
    pub indices: Vec<usize>,
}

impl Batch {
    fn pack(examples: &[SeqExample], indices: Vec<usize>) -> Self {
        let width = indices.iter().map(|&i| examples[i].values.len()).max().unwrap_or(0);
        let mut padded = vec![0.0; indices.len() * width];
        let mut mask = vec![false; indices.len() * width];
        for (r, &i) in indices.iter().enumerate() {
            let v = &examples[i].values;
            let start = r * width + width - v.len();
            padded[start..start + v.len()].copy_from_slice(v);
            mask[start..(r + 1) * width].fill(true);
        }
        Batch {
            width,
            padded,
            mask,
            labels: indices.iter().map(|&i| examples[i].label).collect(),
            indices,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The valid steps of row `r`.
    pub fn row(&self, r: usize) -> &[f64] {
        let m = &self.mask[r * self.width..(r + 1) * self.width];
        let pad = m.iter().take_while(|v| !**v).count();
        &self.padded[r * self.width + pad..(r + 1) * self.width]
    }
}

/// Groups examples into batches of similar length. With an RNG the order
/// within each length group and the batch order are shuffled.
pub fn make_batches(examples: &[SeqExample], batch_size: usize, rng: Option<&mut StreamRng>) -> Vec<Batch> {
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let batch_size = batch_size.max(1);
    match rng {
        Some(r) => {
            order.shuffle(r);
            order.sort_by_key(|&i| examples[i].values.len());
            let mut chunks: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
            chunks.shuffle(r);
            chunks.into_iter().map(|c| Batch::pack(examples, c)).collect()
        }
        None => {
            order.sort_by_key(|&i| examples[i].values.len());
            order
                .chunks(batch_size)
                .map(|c| Batch::pack(examples, c.to_vec()))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn ex(n: usize, v: f64) -> SeqExample {
        SeqExample { values: vec![v; n], label: n % 2 == 0 }
    }

    #[test]
    fn rows_are_left_padded() {
        let xs = vec![ex(2, 0.5), ex(4, 0.25)];
        let b = &make_batches(&xs, 8, None)[0];
        assert_eq!(b.width, 4);
        assert_eq!(b.padded, vec![0.0, 0.0, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25]);
        assert_eq!(b.mask[..4], [false, false, true, true]);
        assert_eq!(b.row(0), &[0.5, 0.5]);
        assert_eq!(b.row(1).len(), 4);
    }

    proptest! {
        #[test]
        fn every_example_lands_in_exactly_one_batch(
            lens in proptest::collection::vec(1usize..30, 1..120), bs in 1usize..40, seed in any::<u64>()
        ) {
            let xs: Vec<_> = lens.iter().enumerate().map(|(i, &n)| ex(n, i as f64)).collect();
            let mut r = rng::stream(seed, rng::SAMPLING, 0);
            let batches = make_batches(&xs, bs, Some(&mut r));
            let mut seen: Vec<usize> = batches.iter().flat_map(|b| b.indices.clone()).collect();
            seen.sort();
            prop_assert_eq!(seen, (0..xs.len()).collect::<Vec<_>>());
            for b in &batches {
                prop_assert!(b.len() <= bs);
                for (r, &i) in b.indices.iter().enumerate() {
                    prop_assert_eq!(b.row(r), &xs[i].values[..]);
                    prop_assert_eq!(b.labels[r], xs[i].label);
                }
            }
        }
    }
}
