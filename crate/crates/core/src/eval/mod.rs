//! Evaluation: confusion-table metrics, ROC analysis and the balanced
//! k-fold cross-validation protocol.

mod folds;
mod harness;
mod metrics;
mod roc;

pub use folds::{make_folds, FoldSplit, HOLDOUT_FRACTION};
pub use harness::{
    cross_validate, evaluate_fold, fold_seed, run_folds, score_fold, Aggregate, Classifier, FoldData,
    FoldMetrics, FoldPredictions, MeanStd, MetricsReport, ModelFactory,
};
pub use metrics::{confusion, metrics, ConfusionCounts, Metrics};
pub use roc::{roc_auc, write_roc_csv, RocCurve, RocPoint};
