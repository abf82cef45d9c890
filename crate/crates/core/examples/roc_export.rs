//! Pooled out-of-fold ROC curves as CSV, ready for any plotting tool.

use std::fs::File;

use hds_fallcast::eval::{make_folds, roc_auc, run_folds, write_roc_csv};
use hds_fallcast::models::ModelSpec;
use hds_fallcast::synth::{generate, SynthConfig};

fn main() -> hds_fallcast::Result<()> {
    let cohort = generate(&SynthConfig::default())?;
    let folds = make_folds(&cohort, 10, 0)?;
    let out = std::env::temp_dir();
    for spec in [ModelSpec::threshold(7), ModelSpec::threshold(20), ModelSpec::Gbt(Default::default())] {
        let (_, preds) = run_folds(&spec, &cohort, &folds, 0, 1)?;
        let scores: Vec<f64> = preds.iter().flat_map(|f| f.predictions.iter().map(|p| p.prob_fall)).collect();
        let truth: Vec<bool> = preds.iter().flat_map(|f| f.truth.iter().copied()).collect();
        let curve = roc_auc(&scores, &truth)?;
        let path = out.join(format!("roc_{}.csv", spec.label()));
        let file = File::create(&path).expect("create csv");
        write_roc_csv(&curve.points, file)?;
        println!("{:<7} auc {:.3}  {} points -> {}", spec.label(), curve.auc, curve.points.len(), path.display());
    }
    Ok(())
}
