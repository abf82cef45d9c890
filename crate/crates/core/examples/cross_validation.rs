//! Full comparison on one shared set of folds: both clinical thresholds,
//! the scalar classifiers and the three recurrent cells.
//!
//!     cargo run --release --example cross_validation -- 4

use hds_fallcast::cli::format_table;
use hds_fallcast::eval::{make_folds, run_folds};
use hds_fallcast::models::ModelSpec;
use hds_fallcast::synth::{generate, SynthConfig};

fn main() -> hds_fallcast::Result<()> {
    let workers = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let seed = 7;
    let cohort = generate(&SynthConfig { seed, ..SynthConfig::default() })?;
    let folds = make_folds(&cohort, 10, seed)?;

    let mut reports = Vec::new();
    for mut spec in ModelSpec::default_suite() {
        if let ModelSpec::Rnn(r) | ModelSpec::Lstm(r) | ModelSpec::Gru(r) = &mut spec {
            r.hyper.hidden_size = 32;
            r.hyper.lr0 = 0.01;
        }
        eprintln!("{}...", spec.label());
        reports.push(run_folds(&spec, &cohort, &folds, seed, workers)?.0);
    }
    print!("{}", format_table(&reports));
    Ok(())
}
