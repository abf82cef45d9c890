//! Command-line front end: argument parsing, run configuration and the
//! five experiment commands. Every artifact is written atomically under
//! the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    make_folds, roc_auc, run_folds, score_fold, write_roc_csv, FoldData, FoldMetrics,
    FoldPredictions, FoldSplit, MeanStd, MetricsReport,
};
use crate::io::{read_json, write_atomic, write_json};
use crate::models::{FittedModel, ModelSpec};
use crate::rng;
use crate::seqnet::{grad_check, CellKind, Checkpoint, EpochRecord, GradCheckReport};
use crate::series::Dataset;
use crate::synth::{self, SynthConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "HDS_FALLCAST_SEED";

#[derive(Debug, Parser)]
#[command(name = "hds-fallcast", version, about = "Fall prediction from Hester Davis Score series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Output directory [default: current directory]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Folds trained concurrently.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Restrict the run to one model family.
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    /// Threshold for `--model threshold`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<i32>,
    /// Encounter CSV to use instead of generating a synthetic cohort.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort as encounters.csv.
    Synth,
    /// Train on the first fold's training split; write checkpoints and history.
    Train,
    /// Balanced k-fold cross-validation of every configured model.
    Cv,
    /// Pooled out-of-fold ROC curve per model.
    Roc,
    /// Finite-difference check of the recurrent gradients.
    Gradcheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Threshold,
    Knn,
    Forest,
    Gbt,
    Rnn,
    Lstm,
    Gru,
}

impl ModelKind {
    fn matches(self, s: &ModelSpec) -> bool {
        matches!(
            (self, s),
            (ModelKind::Threshold, ModelSpec::Threshold(_))
                | (ModelKind::Knn, ModelSpec::Knn(_))
                | (ModelKind::Forest, ModelSpec::Forest(_))
                | (ModelKind::Gbt, ModelSpec::Gbt(_))
                | (ModelKind::Rnn, ModelSpec::Rnn(_))
                | (ModelKind::Lstm, ModelSpec::Lstm(_))
                | (ModelKind::Gru, ModelSpec::Gru(_))
        )
    }

    fn default_spec(self) -> ModelSpec {
        ModelSpec::default_suite()
            .into_iter()
            .find(|s| self.matches(s))
            .expect("every kind is in the default suite")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    pub kinds: Vec<CellKind>,
    pub hidden_size: usize,
    pub seq_len: usize,
    pub seeds: usize,
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            kinds: CellKind::ALL.to_vec(),
            hidden_size: 8,
            seq_len: 12,
            seeds: 20,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "ten")]
    pub folds: usize,
    /// Encounter CSV; a synthetic cohort is generated when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Cohort settings. Its `seed` must stay 0: the run seed drives generation.
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default = "ModelSpec::default_suite")]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub gradcheck: GradCheckConfig,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            workers: 1,
            folds: 10,
            data: None,
            synth: SynthConfig::default(),
            models: ModelSpec::default_suite(),
            gradcheck: GradCheckConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::Config(format!("{}: no such config file", path.display())));
        }
        read_json(path)
    }

    /// Folds command-line flags over the file settings. Flags win; the
    /// seed falls back to the environment, then the file, then 0.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut c = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = args.seed {
            c.seed = s;
        }
        if let Some(w) = args.workers {
            c.workers = w;
        }
        if let Some(d) = &args.data {
            c.data = Some(d.clone());
        }
        let kind = match (args.model, args.theta) {
            (None, Some(_)) => Some(ModelKind::Threshold),
            (Some(k), Some(_)) if k != ModelKind::Threshold => {
                return Err(Error::Config("--theta only applies to --model threshold".into()))
            }
            (k, _) => k,
        };
        if let Some(kind) = kind {
            c.models = match args.theta {
                Some(t) => vec![ModelSpec::threshold(t)],
                None => {
                    let picked: Vec<_> = c.models.iter().filter(|s| kind.matches(s)).cloned().collect();
                    if picked.is_empty() {
                        vec![kind.default_spec()]
                    } else {
                        picked
                    }
                }
            };
        }
        if c.synth.seed != 0 {
            return Err(Error::Config("synth.seed is set from the run seed; leave it out of the config".into()));
        }
        c.synth.seed = c.seed;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.folds == 0 {
            return bad("folds must be at least 1".into());
        }
        if self.synth.seed != self.seed {
            return bad("synth.seed is set from the run seed; leave it out of the config".into());
        }
        self.synth.check()?;
        if self.models.is_empty() {
            return bad("no models configured".into());
        }
        let mut labels: Vec<String> = self.models.iter().map(ModelSpec::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("model {} is configured twice", w[0]));
        }
        for m in &self.models {
            m.check(&self.synth.scale)?;
        }
        let g = &self.gradcheck;
        if g.kinds.is_empty() || g.hidden_size == 0 || g.seq_len == 0 || g.seeds == 0 {
            return bad("gradcheck needs kinds, hidden_size, seq_len and seeds".into());
        }
        if !(g.tolerance.is_finite() && g.tolerance > 0.0) {
            return bad("gradcheck tolerance must be positive".into());
        }
        Ok(())
    }

    /// The configured CSV, or a freshly generated cohort.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.data {
            Some(path) => {
                let meta = synth::metadata_path(path);
                let scale = if meta.exists() {
                    synth::load_metadata(&meta)?
                } else {
                    self.synth.scale
                };
                synth::load_csv(path, scale)
            }
            None => synth::generate(&self.synth),
        }
    }
}

/// Report written by `cv`: the per-fold and mean ± std metrics of each model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub schema_version: u32,
    pub seed: u64,
    pub folds: usize,
    pub n_fall: usize,
    pub n_nofall: usize,
    pub models: Vec<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub model: String,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Held-out scores on the first fold's test set.
    pub test: FoldMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub model: String,
    pub pooled_auc: f64,
    pub fold_auc: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckSummary {
    pub tolerance: f64,
    pub passed: bool,
    pub max_rel_error: f64,
    pub runs: Vec<GradCheckReport>,
}

/// What a command wrote and what it prints.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
}

/// Parses, runs, and maps failures to the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = RunConfig::resolve(&cli.common)?;
    cfg.check()?;
    let out = cli.common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    match cli.command {
        Command::Synth => cmd_synth(&cfg, &out),
        Command::Train => cmd_train(&cfg, &out),
        Command::Cv => cmd_cv(&cfg, &out),
        Command::Roc => cmd_roc(&cfg, &out),
        Command::Gradcheck => cmd_gradcheck(&cfg, &out),
    }
}

pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let d = synth::generate(&cfg.synth)?;
    let csv = out.join("encounters.csv");
    let meta = synth::metadata_path(&csv);
    synth::save_csv(&d, &csv)?;
    synth::save_metadata(&d.scale, &meta)?;
    let (f, n) = d.class_counts();
    Ok(Outcome {
        summary: format!("{} encounters ({f} fall, {n} no fall) -> {}\n", d.len(), csv.display()),
        written: vec![csv, meta],
    })
}

fn first_fold(cfg: &RunConfig, d: &Dataset) -> Result<FoldSplit> {
    Ok(make_folds(d, cfg.folds, cfg.seed)?.swap_remove(0))
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let d = cfg.dataset()?;
    let split = first_fold(cfg, &d)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| &d.encounters[i]).collect::<Vec<_>>();
    let data = FoldData {
        scale: &d.scale,
        train: pick(&split.train),
        validation: pick(&split.validation),
    };
    let truth: Vec<bool> = split.test.iter().map(|&i| d.encounters[i].outcome).collect();
    let seed = crate::eval::fold_seed(cfg.seed, 0);
    let mut written = Vec::new();
    let mut summary = String::new();
    for spec in &cfg.models {
        let label = spec.label();
        let fitted = spec.fit_model(&data, seed)?;
        let preds = split
            .test
            .iter()
            .map(|&i| crate::eval::Classifier::predict(&fitted, &d.encounters[i]))
            .collect::<Result<Vec<_>>>()?;
        let test = score_fold(0, &preds, &truth)?;
        let (json, epochs) = match &fitted {
            FittedModel::Baseline(m) => (m.to_json()?, Vec::new()),
            FittedModel::Recurrent {
                params, hyper, history, ..
            } => (Checkpoint::new(params, hyper, history).to_json()?, history.clone()),
        };
        let model_path = out.join(format!("{label}.model.json"));
        let hist_path = out.join(format!("{label}.history.json"));
        write_atomic(&model_path, format!("{json}\n").as_bytes())?;
        write_json(
            &hist_path,
            &TrainHistory {
                model: label.clone(),
                seed,
                epochs,
                test,
            },
        )?;
        let _ = writeln!(summary, "{label:<8} test auc {:.3}  accuracy {:.3}", test.auc, test.accuracy);
        written.extend([model_path, hist_path]);
    }
    Ok(Outcome { written, summary })
}

type ModelRun = (MetricsReport, Vec<FoldPredictions>);

fn cross_validate_all(cfg: &RunConfig, d: &Dataset) -> Result<(Vec<FoldSplit>, Vec<ModelRun>)> {
    // One fold assignment shared by every model.
    let folds = make_folds(d, cfg.folds, cfg.seed)?;
    let runs = cfg
        .models
        .iter()
        .map(|m| run_folds(m, d, &folds, cfg.seed, cfg.workers))
        .collect::<Result<Vec<_>>>()?;
    Ok((folds, runs))
}

fn pm(m: MeanStd) -> String {
    format!("{:.3}±{:.3}", m.mean, m.std)
}

/// Mean ± std table, one row per model.
pub fn format_table(reports: &[MetricsReport]) -> String {
    let mut s = format!(
        "{:<8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
        "model", "accuracy", "f1", "specificity", "sensitivity", "ppv", "auc"
    );
    for r in reports {
        let a = &r.aggregate;
        let _ = writeln!(
            s,
            "{:<8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
            r.model,
            pm(a.accuracy),
            pm(a.f1),
            pm(a.specificity),
            pm(a.sensitivity),
            pm(a.ppv),
            pm(a.auc)
        );
    }
    s
}

pub fn cmd_cv(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let d = cfg.dataset()?;
    let (folds, runs) = cross_validate_all(cfg, &d)?;
    let (n_fall, n_nofall) = d.class_counts();
    let report = CvReport {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        folds: cfg.folds,
        n_fall,
        n_nofall,
        models: runs.into_iter().map(|r| r.0).collect(),
    };
    let report_path = out.join("cv_report.json");
    let folds_path = out.join("folds.json");
    write_json(&folds_path, &folds)?;
    write_json(&report_path, &report)?;
    Ok(Outcome {
        summary: format_table(&report.models),
        written: vec![report_path, folds_path],
    })
}

pub fn cmd_roc(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let d = cfg.dataset()?;
    let (_, runs) = cross_validate_all(cfg, &d)?;
    let mut written = Vec::new();
    let mut summaries = Vec::new();
    let mut summary = String::new();
    for (report, preds) in runs {
        let scores: Vec<f64> = preds.iter().flat_map(|f| f.predictions.iter().map(|p| p.prob_fall)).collect();
        let truth: Vec<bool> = preds.iter().flat_map(|f| f.truth.iter().copied()).collect();
        let curve = roc_auc(&scores, &truth)?;
        let mut buf = Vec::new();
        write_roc_csv(&curve.points, &mut buf)?;
        let path = out.join(format!("roc_{}.csv", report.model));
        write_atomic(&path, &buf)?;
        written.push(path);
        let _ = writeln!(summary, "{:<8} pooled auc {:.3}", report.model, curve.auc);
        summaries.push(RocSummary {
            model: report.model,
            pooled_auc: curve.auc,
            fold_auc: report.aggregate.auc,
        });
    }
    let path = out.join("roc_summary.json");
    write_json(&path, &summaries)?;
    written.push(path);
    Ok(Outcome { written, summary })
}

pub fn cmd_gradcheck(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let g = &cfg.gradcheck;
    let mut runs = Vec::new();
    for &kind in &g.kinds {
        for i in 0..g.seeds {
            let seed = rng::derive(cfg.seed, "gradcheck", i as u64);
            runs.push(grad_check(kind, g.hidden_size, g.seq_len, seed)?);
        }
    }
    let max = runs.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let passed = max < g.tolerance;
    let path = out.join("gradcheck.json");
    write_json(
        &path,
        &GradCheckSummary {
            tolerance: g.tolerance,
            passed,
            max_rel_error: max,
            runs,
        },
    )?;
    if !passed {
        return Err(Error::Numeric(format!(
            "max relative gradient error {max:.3e} exceeds {:.1e}",
            g.tolerance
        )));
    }
    Ok(Outcome {
        summary: format!("gradcheck pass: max relative error {max:.3e} < {:.1e}\n", g.tolerance),
        written: vec![path],
    })
}
