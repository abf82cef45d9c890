use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    /// True fall count.
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// True non-fall count.
    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

pub fn confusion(preds: &[bool], truth: &[bool]) -> Result<ConfusionCounts> {
    if preds.len() != truth.len() {
        return Err(Error::Data(format!(
            "{} predictions vs {} labels",
            preds.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in preds.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub specificity: f64,
    pub sensitivity: f64,
    pub ppv: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, F1, specificity, sensitivity and PPV. A ratio with a zero
/// denominator reports 0.
pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.positives() + c.negatives();
    if total == 0 {
        return Err(Error::Data("metrics of an empty confusion table".into()));
    }
    Ok(Metrics {
        accuracy: ratio(c.tp + c.tn, total),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        ppv: ratio(c.tp, c.tp + c.fp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tallies() {
        let c = confusion(&[true, true, false], &[true, false, false]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, tn: 1, fn_: 0 });
        let c = confusion(&[true, false], &[true, false]).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert_eq!(confusion(&[], &[]).unwrap(), ConfusionCounts::default());
        assert!(confusion(&[true], &[]).is_err());
    }

    #[test]
    fn worked_example() {
        let m = metrics(&ConfusionCounts { tp: 3, tn: 2, fp: 1, fn_: 2 }).unwrap();
        assert_eq!(m.accuracy, 0.625);
        assert_eq!(m.f1, 6.0 / 9.0);
        assert_eq!(m.specificity, 2.0 / 3.0);
        assert_eq!(m.sensitivity, 0.6);
        assert_eq!(m.ppv, 0.75);
    }

    #[test]
    fn perfect_and_sentinel_cases() {
        let m = metrics(&ConfusionCounts { tp: 5, tn: 5, fp: 0, fn_: 0 }).unwrap();
        assert_eq!([m.accuracy, m.f1, m.specificity, m.sensitivity, m.ppv], [1.0; 5]);
        let m = metrics(&ConfusionCounts { tp: 0, tn: 4, fp: 0, fn_: 3 }).unwrap();
        assert_eq!((m.ppv, m.f1), (0.0, 0.0));
        assert!(metrics(&ConfusionCounts::default()).is_err());
    }
}
