//! Train a GRU on one balanced split, save it, reload it and score a few
//! encounters with the reloaded weights.

use hds_fallcast::eval::{make_folds, score_fold};
use hds_fallcast::seqnet::{examples_from, predict, train, CellKind, Checkpoint, HyperParams};
use hds_fallcast::synth::{generate, SynthConfig};

fn main() -> hds_fallcast::Result<()> {
    let cohort = generate(&SynthConfig::default())?;
    let split = make_folds(&cohort, 10, 0)?.swap_remove(0);
    let pick = |ids: &[usize]| ids.iter().map(|&i| &cohort.encounters[i]).collect::<Vec<_>>();

    let hyper = HyperParams { hidden_size: 32, lr0: 0.01, ..HyperParams::default() };
    let train_set = examples_from(pick(&split.train), &cohort.scale);
    let val_set = examples_from(pick(&split.validation), &cohort.scale);
    let (params, state) = train(CellKind::Gru, &train_set, &val_set, &hyper)?;
    for r in &state.history {
        println!(
            "epoch {:>3}  lr {:.4}  train {:.4}  val {:.4}{}",
            r.epoch,
            r.learning_rate,
            r.train_loss,
            r.val_loss,
            if r.improved { "  *" } else { "" }
        );
    }

    let json = Checkpoint::new(&params, &hyper, &state.history).to_json()?;
    let reloaded = Checkpoint::from_json(&json)?.params()?;
    assert_eq!(reloaded, params);

    let test = pick(&split.test);
    let preds = test
        .iter()
        .map(|e| predict(&reloaded, e, &cohort.scale))
        .collect::<hds_fallcast::Result<Vec<_>>>()?;
    let truth: Vec<bool> = test.iter().map(|e| e.outcome).collect();
    let m = score_fold(0, &preds, &truth)?;
    println!("held-out: auc {:.3}  accuracy {:.3}  ({} bytes of checkpoint)", m.auc, m.accuracy, json.len());
    Ok(())
}
