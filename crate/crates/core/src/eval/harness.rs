//! Fold-level training and evaluation, and aggregation of the per-fold
//! metrics into a mean ± std report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{make_folds, FoldSplit};
use super::metrics::{confusion, metrics};
use super::roc::roc_auc;
use crate::error::{Error, Result};
use crate::rng;
use crate::series::{Dataset, Encounter, Prediction, ScaleConfig};

/// Training material handed to a model for one fold.
pub struct FoldData<'a> {
    pub scale: &'a ScaleConfig,
    pub train: Vec<&'a Encounter>,
    pub validation: Vec<&'a Encounter>,
}

pub trait Classifier: Send + Sync {
    fn predict(&self, e: &Encounter) -> Result<Prediction>;
}

/// Builds a fresh, untrained model per fold.
pub trait ModelFactory: Sync {
    fn name(&self) -> String;
    fn fit(&self, data: &FoldData<'_>, seed: u64) -> Result<Box<dyn Classifier>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub specificity: f64,
    pub sensitivity: f64,
    pub ppv: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: MeanStd,
    pub f1: MeanStd,
    pub specificity: MeanStd,
    pub sensitivity: MeanStd,
    pub ppv: MeanStd,
    pub auc: MeanStd,
}

impl Aggregate {
    pub fn of(folds: &[FoldMetrics]) -> Self {
        let col = |f: fn(&FoldMetrics) -> f64| MeanStd::of(folds.iter().map(f));
        Aggregate {
            accuracy: col(|m| m.accuracy),
            f1: col(|m| m.f1),
            specificity: col(|m| m.specificity),
            sensitivity: col(|m| m.sensitivity),
            ppv: col(|m| m.ppv),
            auc: col(|m| m.auc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub folds: Vec<FoldMetrics>,
    pub aggregate: Aggregate,
}

/// Test-set predictions of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPredictions {
    pub fold: usize,
    pub ids: Vec<usize>,
    pub predictions: Vec<Prediction>,
    pub truth: Vec<bool>,
}

pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    rng::derive(seed, "fold-model", fold as u64)
}

/// Metrics and AUC of one fold's test predictions.
pub fn score_fold(fold: usize, predictions: &[Prediction], truth: &[bool]) -> Result<FoldMetrics> {
    let labels: Vec<bool> = predictions.iter().map(|p| p.label).collect();
    let scores: Vec<f64> = predictions.iter().map(|p| p.prob_fall).collect();
    let m = metrics(&confusion(&labels, truth)?)?;
    Ok(FoldMetrics {
        fold,
        accuracy: m.accuracy,
        f1: m.f1,
        specificity: m.specificity,
        sensitivity: m.sensitivity,
        ppv: m.ppv,
        auc: roc_auc(&scores, truth)?.auc,
    })
}

pub fn evaluate_fold(
    factory: &dyn ModelFactory,
    d: &Dataset,
    split: &FoldSplit,
    seed: u64,
) -> Result<(FoldMetrics, FoldPredictions)> {
    let pick = |ids: &[usize]| ids.iter().map(|&i| &d.encounters[i]).collect::<Vec<_>>();
    let data = FoldData {
        scale: &d.scale,
        train: pick(&split.train),
        validation: pick(&split.validation),
    };
    let model = factory.fit(&data, fold_seed(seed, split.fold_index))?;
    let predictions = split
        .test
        .iter()
        .map(|&i| model.predict(&d.encounters[i]))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<bool> = split.test.iter().map(|&i| d.encounters[i].outcome).collect();
    Ok((
        score_fold(split.fold_index, &predictions, &truth)?,
        FoldPredictions {
            fold: split.fold_index,
            ids: split.test.clone(),
            predictions,
            truth,
        },
    ))
}

/// Runs every fold, `workers` at a time, keeping results in fold order.
pub fn run_folds(
    factory: &dyn ModelFactory,
    d: &Dataset,
    folds: &[FoldSplit],
    seed: u64,
    workers: usize,
) -> Result<(MetricsReport, Vec<FoldPredictions>)> {
    let one = |split: &FoldSplit| {
        evaluate_fold(factory, d, split, seed).map_err(|e| Error::Fold {
            fold: split.fold_index,
            source: Box::new(e),
        })
    };
    let results: Vec<_> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| folds.par_iter().map(one).collect::<Result<Vec<_>>>())?
    } else {
        folds.iter().map(one).collect::<Result<Vec<_>>>()?
    };
    let (fold_metrics, preds): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((
        MetricsReport {
            model: factory.name(),
            aggregate: Aggregate::of(&fold_metrics),
            folds: fold_metrics,
        },
        preds,
    ))
}

/// k-fold balanced cross-validation of one model with freshly built folds.
pub fn cross_validate(factory: &dyn ModelFactory, d: &Dataset, k: usize, seed: u64) -> Result<MetricsReport> {
    let folds = make_folds(d, k, seed)?;
    Ok(run_folds(factory, d, &folds, seed, 1)?.0)
}
