//! Generate a synthetic cohort, write it as CSV and read it back.
//! The generator defaults are illustrative, not clinical estimates.

use hds_fallcast::series::validate_dataset;
use hds_fallcast::synth::{generate, load_csv, save_csv, SynthConfig};

fn main() -> hds_fallcast::Result<()> {
    let config = SynthConfig { n_fall: 50, n_nofall: 500, trend_slope: 1.5, ..SynthConfig::default() };
    let cohort = generate(&config)?;
    assert!(validate_dataset(&cohort).is_empty());

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("encounters.csv");
    save_csv(&cohort, &path)?;
    let back = load_csv(&path, cohort.scale)?;
    assert_eq!(back.encounters, cohort.encounters);

    for e in cohort.encounters.iter().filter(|e| e.outcome).take(3) {
        println!("{} fall    {:?}", e.id(), e.series.scores);
    }
    for e in cohort.encounters.iter().filter(|e| !e.outcome).take(3) {
        println!("{} no fall {:?}", e.id(), e.series.scores);
    }
    let (f, n) = back.class_counts();
    println!("{f} fall / {n} no-fall encounters round-tripped through {}", path.display());
    Ok(())
}
