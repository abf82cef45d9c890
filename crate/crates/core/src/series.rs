//! Domain types for Hester Davis Score encounters and the two views the
//! models consume: the last observed score (one-step-ahead) and the
//! normalized history up to the prediction origin (sequence-to-point).

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric range of the score and its sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub s_min: i32,
    pub s_max: i32,
    pub delta_t_hours: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            s_min: 0,
            s_max: 30,
            delta_t_hours: 8.0,
        }
    }
}

impl ScaleConfig {
    pub fn new(s_min: i32, s_max: i32, delta_t_hours: f64) -> Result<Self> {
        let scale = ScaleConfig {
            s_min,
            s_max,
            delta_t_hours,
        };
        scale.check()?;
        Ok(scale)
    }

    pub fn check(&self) -> Result<()> {
        if self.s_min >= self.s_max {
            return Err(Error::Config(format!(
                "s_min ({}) must be below s_max ({})",
                self.s_min, self.s_max
            )));
        }
        if !(self.delta_t_hours > 0.0 && self.delta_t_hours.is_finite()) {
            return Err(Error::Config(format!(
                "delta_t_hours must be positive, got {}",
                self.delta_t_hours
            )));
        }
        Ok(())
    }

    pub fn contains(&self, score: i32) -> bool {
        (self.s_min..=self.s_max).contains(&score)
    }

    pub fn normalize(&self, score: i32) -> f64 {
        f64::from(score - self.s_min) / f64::from(self.s_max - self.s_min)
    }

    /// Inverse of [`normalize`](Self::normalize), rounded back to the integer grid.
    pub fn denormalize(&self, value: f64) -> i32 {
        (value * f64::from(self.s_max - self.s_min)).round() as i32 + self.s_min
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdsSeries {
    pub encounter_id: String,
    pub scores: Vec<i32>,
}

/// One hospital stay: its score history, whether a fall followed the
/// prediction origin, and the origin itself (1-based index of the last
/// score visible to a model).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encounter {
    pub series: HdsSeries,
    pub outcome: bool,
    pub origin: usize,
}

impl Encounter {
    pub fn new(id: impl Into<String>, scores: Vec<i32>, outcome: bool, origin: usize) -> Self {
        Encounter {
            series: HdsSeries {
                encounter_id: id.into(),
                scores,
            },
            outcome,
            origin,
        }
    }

    pub fn id(&self) -> &str {
        &self.series.encounter_id
    }

    /// Score at the prediction origin.
    pub fn last_score(&self) -> Result<i32> {
        if self.origin == 0 || self.origin > self.series.scores.len() {
            return Err(Error::Data(format!(
                "encounter {}: origin {} outside 1..={}",
                self.id(),
                self.origin,
                self.series.scores.len()
            )));
        }
        Ok(self.series.scores[self.origin - 1])
    }

    /// Observed history up to and including the origin.
    pub fn history(&self) -> &[i32] {
        let end = self.origin.min(self.series.scores.len());
        &self.series.scores[..end]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub encounters: Vec<Encounter>,
    pub scale: ScaleConfig,
}

impl Dataset {
    pub fn new(encounters: Vec<Encounter>, scale: ScaleConfig) -> Self {
        Dataset { encounters, scale }
    }

    pub fn len(&self) -> usize {
        self.encounters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.encounters.is_empty()
    }

    /// (fall, non-fall) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let falls = self.encounters.iter().filter(|e| e.outcome).count();
        (falls, self.encounters.len() - falls)
    }
}

/// A model output: the hard label and a ranking score for ROC analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: bool,
    pub prob_fall: f64,
}

impl Prediction {
    /// Probability-backed prediction; a probability of exactly 0.5 is
    /// resolved toward the fall class.
    pub fn from_prob(prob_fall: f64) -> Self {
        Prediction {
            label: prob_fall >= 0.5,
            prob_fall,
        }
    }

    pub fn hard(label: bool) -> Self {
        Prediction {
            label,
            prob_fall: if label { 1.0 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    BadScale,
    DuplicateId,
    EmptySeries,
    ScoreOutOfRange,
    OriginOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub encounter_id: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{:?}]: {}", self.encounter_id, self.rule, self.detail)
    }
}

pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = d.scale.check() {
        out.push(Violation {
            encounter_id: String::new(),
            rule: Rule::BadScale,
            detail: e.to_string(),
        });
    }
    let mut seen = HashSet::new();
    for e in &d.encounters {
        let id = e.id().to_string();
        let mut push = |rule, detail: String| {
            out.push(Violation {
                encounter_id: id.clone(),
                rule,
                detail,
            })
        };
        if !seen.insert(e.id()) {
            push(Rule::DuplicateId, "encounter id repeated".into());
        }
        let scores = &e.series.scores;
        if scores.is_empty() {
            push(Rule::EmptySeries, "no scores".into());
        }
        for (i, &s) in scores.iter().enumerate() {
            if !d.scale.contains(s) {
                push(
                    Rule::ScoreOutOfRange,
                    format!(
                        "score {s} at index {} outside [{}, {}]",
                        i + 1,
                        d.scale.s_min,
                        d.scale.s_max
                    ),
                );
            }
        }
        if e.origin == 0 || e.origin > scores.len() {
            push(
                Rule::OriginOutOfRange,
                format!("origin {} outside 1..={}", e.origin, scores.len()),
            );
        }
    }
    out
}

/// One `(last score, outcome)` pair per encounter, in dataset order.
pub fn derive_onestep_pairs(d: &Dataset) -> Result<Vec<(i32, bool)>> {
    d.encounters
        .iter()
        .map(|e| Ok((e.last_score()?, e.outcome)))
        .collect()
}

/// History up to the origin, min-max scaled into `[0, 1]`.
pub fn derive_sequence(e: &Encounter, scale: &ScaleConfig) -> Vec<f64> {
    e.history().iter().map(|&s| scale.normalize(s)).collect()
}
