//! One-step-ahead classifiers on the last score: k-NN, random forest and
//! gradient-boosted stumps, each scored by balanced cross-validation.

use hds_fallcast::baseline::GbtParams;
use hds_fallcast::cli::format_table;
use hds_fallcast::eval::cross_validate;
use hds_fallcast::models::{ForestSpec, KnnSpec, ModelSpec};
use hds_fallcast::synth::{generate, SynthConfig};

fn main() -> hds_fallcast::Result<()> {
    let cohort = generate(&SynthConfig { seed: 3, ..SynthConfig::default() })?;
    let models = [
        ModelSpec::Knn(KnnSpec { k: 1 }),
        ModelSpec::Knn(KnnSpec { k: 15 }),
        ModelSpec::Forest(ForestSpec { tree_count: 100, max_depth: 6 }),
        ModelSpec::Gbt(GbtParams::default()),
    ];
    let mut reports = Vec::new();
    for m in &models {
        let mut r = cross_validate(m, &cohort, 10, 3)?;
        if let ModelSpec::Knn(k) = m {
            r.model = format!("knn-{}", k.k);
        }
        reports.push(r);
    }
    print!("{}", format_table(&reports));
    Ok(())
}
