use crate::error::{Error, Result};

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before the log.
pub const PROB_CLIP: f64 = 1e-12;

/// Mean binary cross-entropy of fall probabilities against labels.
pub fn loss(probs_fall: &[f64], labels: &[bool]) -> Result<f64> {
    if probs_fall.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} probabilities vs {} labels",
            probs_fall.len(),
            labels.len()
        )));
    }
    if probs_fall.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = probs_fall
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / probs_fall.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn closed_forms() {
        assert!(loss(&[1.0], &[true]).unwrap() <= 1e-11);
        assert!((loss(&[0.5], &[true]).unwrap() - LN_2).abs() < 1e-15);
        assert!((loss(&[0.5, 0.5], &[true, false]).unwrap() - LN_2).abs() < 1e-15);
        assert!(loss(&[0.0], &[true]).unwrap().is_finite());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(loss(&[0.3, 0.2], &[true]).is_err());
    }
}
