//! The bedside rule: flag a fall when the latest score reaches a threshold.
//!
//!     cargo run --example threshold_rule -- 7 20

use hds_fallcast::baseline::ThresholdModel;
use hds_fallcast::eval::{confusion, metrics};
use hds_fallcast::synth::{generate, SynthConfig};

fn main() -> hds_fallcast::Result<()> {
    let cohort = generate(&SynthConfig::default())?;
    let thetas: Vec<i32> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("theta must be an integer"))
        .collect();
    let thetas = if thetas.is_empty() { vec![7, 20] } else { thetas };

    let truth: Vec<bool> = cohort.encounters.iter().map(|e| e.outcome).collect();
    for theta in thetas {
        let rule = ThresholdModel::new(theta, &cohort.scale)?;
        let flags = cohort
            .encounters
            .iter()
            .map(|e| Ok(rule.predict(e.last_score()?).label))
            .collect::<hds_fallcast::Result<Vec<_>>>()?;
        let c = confusion(&flags, &truth)?;
        let m = metrics(&c)?;
        // A hard rule has a single operating point, so its AUC is the
        // mean of sensitivity and specificity.
        println!(
            "HDS {theta:>2}: sensitivity {:.2}  specificity {:.2}  ppv {:.2}  auc {:.2}",
            m.sensitivity,
            m.specificity,
            m.ppv,
            (m.sensitivity + m.specificity) / 2.0
        );
    }
    Ok(())
}
