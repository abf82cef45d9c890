//! Synthetic encounters standing in for a private cohort, and the
//! one-row-per-score CSV format.
//!
//! Each encounter draws a patient-level score baseline and a stay length;
//! every step adds Gaussian noise. Fall encounters additionally drift
//! upward by `trend_slope` per step, and the fall happens right after the
//! last generated score is due, so their prediction origin is the
//! second-to-last step. The defaults are placeholders, not clinical
//! estimates.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_atomic, write_json};
use crate::rng;
use crate::series::{validate_dataset, Dataset, Encounter, ScaleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_fall: usize,
    pub n_nofall: usize,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    /// Upward drift of fall encounters, in score units per step.
    pub trend_slope: f64,
    pub noise_std: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub scale: ScaleConfig,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_fall: 425,
            n_nofall: 4250,
            baseline_mean: 10.0,
            baseline_std: 4.0,
            trend_slope: 1.0,
            noise_std: 1.5,
            min_len: 4,
            max_len: 20,
            scale: ScaleConfig::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn check(&self) -> Result<()> {
        self.scale.check()?;
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.min_len < 2 || self.max_len < self.min_len {
            return bad("lengths need 2 <= min_len <= max_len");
        }
        if !(self.trend_slope >= 0.0 && self.trend_slope.is_finite()) {
            return bad("trend_slope must be a finite non-negative number");
        }
        if !(self.noise_std >= 0.0 && self.baseline_std >= 0.0)
            || !(self.noise_std.is_finite() && self.baseline_std.is_finite() && self.baseline_mean.is_finite())
        {
            return bad("score distribution parameters must be finite with non-negative spread");
        }
        Ok(())
    }
}

pub fn generate(c: &SynthConfig) -> Result<Dataset> {
    c.check()?;
    let mut r = rng::stream(c.seed, rng::SYNTH, 0);
    let mut labels: Vec<bool> = std::iter::repeat_n(true, c.n_fall)
        .chain(std::iter::repeat_n(false, c.n_nofall))
        .collect();
    labels.shuffle(&mut r);

    let base = Normal::new(c.baseline_mean, c.baseline_std).map_err(|e| Error::Config(e.to_string()))?;
    let noise = Normal::new(0.0, c.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let width = (labels.len().max(1)).ilog10() as usize + 1;

    let encounters = labels
        .into_iter()
        .enumerate()
        .map(|(i, fall)| {
            let len = r.random_range(c.min_len..=c.max_len);
            let level = base.sample(&mut r);
            let slope = if fall { c.trend_slope } else { 0.0 };
            let scores = (0..len)
                .map(|t| {
                    let v = level + slope * t as f64 + noise.sample(&mut r);
                    (v.round() as i32).clamp(c.scale.s_min, c.scale.s_max)
                })
                .collect();
            let origin = if fall { len - 1 } else { len };
            Encounter::new(format!("E{:0width$}", i + 1), scores, fall, origin)
        })
        .collect();
    Ok(Dataset::new(encounters, c.scale))
}

pub const CSV_HEADER: [&str; 5] = ["encounter_id", "seq_index", "hds", "outcome", "origin"];

pub fn to_csv_string(d: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Data(format!("writing csv: {e}"));
    w.write_record(CSV_HEADER).map_err(err)?;
    for e in &d.encounters {
        for (i, s) in e.series.scores.iter().enumerate() {
            w.write_record([
                e.id().to_string(),
                (i + 1).to_string(),
                s.to_string(),
                u8::from(e.outcome).to_string(),
                e.origin.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(format!("writing csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

pub fn save_csv(d: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, to_csv_string(d)?.as_bytes())
}

/// Path of the scale metadata stored next to a dataset CSV.
pub fn metadata_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn save_metadata(scale: &ScaleConfig, path: &Path) -> Result<()> {
    write_json(path, scale)
}

pub fn load_metadata(path: &Path) -> Result<ScaleConfig> {
    let s: ScaleConfig = read_json(path)?;
    s.check()?;
    Ok(s)
}

/// Parses the CSV format. `source` names the input in error messages.
pub fn from_csv_str(text: &str, scale: ScaleConfig, source: &Path) -> Result<Dataset> {
    let malformed = |line: u64, msg: String| Error::Malformed {
        path: source.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    if text.trim().is_empty() {
        return Err(malformed(1, "missing header".into()));
    }
    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(malformed(1, format!("expected header {}", CSV_HEADER.join(","))));
    }

    let mut encounters: Vec<Encounter> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let num = |i: usize| -> Result<i64> {
            field(i)
                .parse::<i64>()
                .map_err(|_| malformed(line, format!("{} is not an integer: {:?}", CSV_HEADER[i], field(i))))
        };
        let id = field(0).to_string();
        if id.is_empty() {
            return Err(malformed(line, "empty encounter_id".into()));
        }
        let seq_index = num(1)?;
        let hds = i32::try_from(num(2)?).map_err(|_| malformed(line, "hds out of integer range".into()))?;
        let outcome = match num(3)? {
            0 => false,
            1 => true,
            v => return Err(malformed(line, format!("outcome must be 0 or 1, got {v}"))),
        };
        let origin = usize::try_from(num(4)?).map_err(|_| malformed(line, "negative origin".into()))?;

        match encounters.last_mut() {
            Some(e) if e.id() == id => {
                if seq_index != e.series.scores.len() as i64 + 1 {
                    return Err(malformed(
                        line,
                        format!("seq_index {seq_index} for {id}, expected {}", e.series.scores.len() + 1),
                    ));
                }
                if e.outcome != outcome || e.origin != origin {
                    return Err(malformed(line, format!("outcome/origin change within encounter {id}")));
                }
                e.series.scores.push(hds);
            }
            _ => {
                if !seen.insert(id.clone()) {
                    return Err(malformed(line, format!("rows for encounter {id} are not contiguous")));
                }
                if seq_index != 1 {
                    return Err(malformed(line, format!("encounter {id} starts at seq_index {seq_index}")));
                }
                encounters.push(Encounter::new(id, vec![hds], outcome, origin));
            }
        }
    }
    let d = Dataset::new(encounters, scale);
    let violations = validate_dataset(&d);
    if violations.is_empty() {
        Ok(d)
    } else {
        Err(Error::Invalid(violations))
    }
}

pub fn load_csv(path: &Path, scale: ScaleConfig) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv_str(&text, scale, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::roc_auc;
    use crate::series::Rule;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig { n_fall: 30, n_nofall: 70, seed, ..Default::default() }
    }

    #[test]
    fn class_counts_and_ranges() {
        let c = small(1);
        let d = generate(&c).unwrap();
        assert_eq!(d.class_counts(), (30, 70));
        assert!(validate_dataset(&d).is_empty());
        for e in &d.encounters {
            let n = e.series.scores.len();
            assert!((c.min_len..=c.max_len).contains(&n));
            assert_eq!(e.origin, if e.outcome { n - 1 } else { n });
        }
    }

    #[test]
    fn degenerate_generator_is_constant() {
        let c = SynthConfig {
            trend_slope: 0.0,
            noise_std: 0.0,
            baseline_std: 0.0,
            baseline_mean: 10.0,
            ..small(2)
        };
        let d = generate(&c).unwrap();
        assert!(d.encounters.iter().all(|e| e.series.scores.iter().all(|&s| s == 10)));
    }

    #[test]
    fn no_falls_requested() {
        let d = generate(&SynthConfig { n_fall: 0, ..small(3) }).unwrap();
        assert_eq!(d.class_counts(), (0, 70));
    }

    #[test]
    fn fixed_seed_is_byte_identical() {
        let a = to_csv_string(&generate(&small(7)).unwrap()).unwrap();
        let b = to_csv_string(&generate(&small(7)).unwrap()).unwrap();
        let c = to_csv_string(&generate(&small(8)).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn steep_trend_dominates_last_score() {
        let c = SynthConfig { n_fall: 300, n_nofall: 300, trend_slope: 1.0, noise_std: 0.3, seed: 5, ..Default::default() };
        let d = generate(&c).unwrap();
        let scores: Vec<f64> = d.encounters.iter().map(|e| f64::from(e.last_score().unwrap())).collect();
        let truth: Vec<bool> = d.encounters.iter().map(|e| e.outcome).collect();
        assert!(roc_auc(&scores, &truth).unwrap().auc >= 0.7);
    }

    #[test]
    fn csv_round_trip() {
        let d = Dataset::new(
            vec![
                Encounter::new("a", vec![4, 9, 15], true, 2),
                Encounter::new("b", vec![7], false, 1),
                Encounter::new("c", vec![0, 30, 12, 12], false, 4),
            ],
            ScaleConfig::default(),
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_csv(&d, &p).unwrap();
        assert_eq!(load_csv(&p, d.scale).unwrap(), d);
    }

    #[test]
    fn header_only_is_empty() {
        let d = from_csv_str("encounter_id,seq_index,hds,outcome,origin\n", ScaleConfig::default(), Path::new("x")).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn non_contiguous_rows_are_rejected_with_line() {
        let text = "encounter_id,seq_index,hds,outcome,origin\na,1,3,0,2\nb,1,4,0,1\na,2,5,0,2\n";
        let err = from_csv_str(text, ScaleConfig::default(), Path::new("x.csv")).unwrap_err();
        match err {
            Error::Malformed { line, msg, .. } => {
                assert_eq!(line, 4);
                assert!(msg.contains("contiguous"), "{msg}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn malformed_fields_name_the_line() {
        let text = "encounter_id,seq_index,hds,outcome,origin\na,1,3,0,1\nb,1,x,0,1\n";
        let err = from_csv_str(text, ScaleConfig::default(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
        let gap = "encounter_id,seq_index,hds,outcome,origin\na,1,3,0,2\na,3,3,0,2\n";
        assert!(from_csv_str(gap, ScaleConfig::default(), Path::new("x")).is_err());
    }

    #[test]
    fn out_of_range_scores_surface_as_violations() {
        let text = "encounter_id,seq_index,hds,outcome,origin\na,1,999,0,1\n";
        match from_csv_str(text, ScaleConfig::default(), Path::new("x")).unwrap_err() {
            Error::Invalid(v) => assert_eq!(v[0].rule, Rule::ScoreOutOfRange),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn metadata_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = metadata_path(&dir.path().join("enc.csv"));
        assert!(p.to_string_lossy().ends_with("enc.meta.json"));
        let s = ScaleConfig::new(1, 40, 4.0).unwrap();
        save_metadata(&s, &p).unwrap();
        assert_eq!(load_metadata(&p).unwrap(), s);
    }
}
