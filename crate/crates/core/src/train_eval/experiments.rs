use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trainer::{evaluate, persistence_baseline, train, EpochRecord, Evaluation, TrainConfig};
use super::{Result, TrainError};
use crate::dam::{DamConfig, DamModel, VariantKind};
use crate::datapipe::{prepare, ModalSeries, PrepConfig, Prepared};

type Metric = (&'static str, fn(&MetricsReport) -> f64);

/// Ablation rows, from no attention at all to the full dual attention.
pub const ABLATION_ORDER: [VariantKind; 4] = [
    VariantKind::ConcatOnly,
    VariantKind::NoIntra,
    VariantKind::NoCross,
    VariantKind::Full,
];

pub const RESULTS_HEADER: &str =
    "variant,stationary,multimodal,seed,median_ae_usd,median_ae_star_usd,mape,best_epoch,fingerprint";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub prep: PrepConfig,
    pub model: DamConfig,
    pub train: TrainConfig,
    /// Seeds for grid runs; empty means `[train.seed]`.
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.train.seed]
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub variant: VariantKind,
    pub stationary: bool,
    pub multimodal: bool,
    pub seed: u64,
    /// USD median absolute error; reported as MAE* when `stationary`.
    pub median_ae_usd: f64,
    pub mape: f64,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub initial_train_loss: f64,
    pub loss_history: Vec<EpochRecord>,
    pub fingerprint: String,
    pub n_train: usize,
    pub n_val: usize,
    pub param_count: usize,
}

pub struct RunOutput {
    pub model: DamModel,
    pub report: MetricsReport,
    pub evaluation: Evaluation,
}

/// Builds a model from `seed`, trains it on `prep` and scores the validation split.
pub fn run_single(prep: &Prepared, model_cfg: &DamConfig, train_cfg: &TrainConfig, seed: u64) -> Result<RunOutput> {
    let mut model = DamModel::new(model_cfg.clone(), seed)?;
    let cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let outcome = train(&mut model, &prep.train, &prep.val, &cfg)?;
    let evaluation = evaluate(&model, &prep.val, &prep.scaler, prep.config.stationary)?;
    let report = MetricsReport {
        variant: model_cfg.variant,
        stationary: prep.config.stationary,
        multimodal: model_cfg.multimodal,
        seed,
        median_ae_usd: evaluation.median_ae_usd,
        mape: evaluation.mape,
        best_epoch: outcome.best_epoch,
        best_val_loss: outcome.best_val_loss,
        initial_train_loss: outcome.initial_train_loss,
        loss_history: outcome.history,
        fingerprint: prep.fingerprint.clone(),
        n_train: prep.train.len(),
        n_val: prep.val.len(),
        param_count: model.param_count(),
    };
    Ok(RunOutput {
        model,
        report,
        evaluation,
    })
}

/// One training run with the configured variant and `train.seed`.
pub fn run_experiment(ms: &ModalSeries, cfg: &ExperimentConfig) -> Result<RunOutput> {
    let prep = prepare(ms, &cfg.prep)?;
    run_single(&prep, &cfg.model, &cfg.train, cfg.train.seed)
}

fn run_grid(jobs: Vec<(&Prepared, DamConfig, u64)>, train_cfg: &TrainConfig) -> Result<Vec<MetricsReport>> {
    let results: Vec<Result<MetricsReport>> = jobs
        .into_par_iter()
        .map(|(prep, mc, seed)| run_single(prep, &mc, train_cfg, seed).map(|o| o.report))
        .collect();
    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rep) => completed.push(rep),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if failures.is_empty() {
        Ok(completed)
    } else {
        Err(TrainError::Partial { completed, failures })
    }
}

/// Trains each ablation variant under every seed, rows in `ABLATION_ORDER`.
pub fn run_ablation(ms: &ModalSeries, cfg: &ExperimentConfig) -> Result<Vec<MetricsReport>> {
    let prep = prepare(ms, &cfg.prep)?;
    let mut jobs = Vec::new();
    for variant in ABLATION_ORDER {
        for &seed in &cfg.seed_list() {
            let mc = DamConfig {
                variant,
                multimodal: true,
                ..cfg.model.clone()
            };
            jobs.push((&prep, mc, seed));
        }
    }
    run_grid(jobs, &cfg.train)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub stationary: bool,
    pub multimodal: bool,
    pub metric: String,
    pub concat_only: f64,
    pub full: f64,
    /// `(concat_only - full) / concat_only`.
    pub relative: f64,
}

#[derive(Debug, Clone)]
pub struct ComparativeReport {
    pub runs: Vec<MetricsReport>,
    pub persistence: Evaluation,
    pub fingerprint: String,
    pub improvements: Vec<Improvement>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn improvements(runs: &[MetricsReport]) -> Vec<Improvement> {
    let mut out = Vec::new();
    for stationary in [true, false] {
        for multimodal in [true, false] {
            let pick = |v: VariantKind, f: fn(&MetricsReport) -> f64| {
                let mut xs: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.variant == v && r.stationary == stationary && r.multimodal == multimodal)
                    .map(f)
                    .collect();
                median(&mut xs)
            };
            let metrics: [Metric; 2] = [("median_ae_usd", |r| r.median_ae_usd), ("mape", |r| r.mape)];
            for (name, f) in metrics {
                let (c, d) = (pick(VariantKind::ConcatOnly, f), pick(VariantKind::Full, f));
                if c.is_finite() && d.is_finite() {
                    out.push(Improvement {
                        stationary,
                        multimodal,
                        metric: name.to_string(),
                        concat_only: c,
                        full: d,
                        relative: (c - d) / c,
                    });
                }
            }
        }
    }
    out
}

/// Full dual attention against plain concatenation, in both input modes and
/// with and without the sentiment modality.
pub fn run_comparative(ms: &ModalSeries, cfg: &ExperimentConfig) -> Result<ComparativeReport> {
    let stationary = prepare(
        ms,
        &PrepConfig {
            stationary: true,
            ..cfg.prep.clone()
        },
    )?;
    let raw = prepare(
        ms,
        &PrepConfig {
            stationary: false,
            ..cfg.prep.clone()
        },
    )?;
    let mut jobs = Vec::new();
    for prep in [&stationary, &raw] {
        for multimodal in [true, false] {
            for variant in [VariantKind::Full, VariantKind::ConcatOnly] {
                for &seed in &cfg.seed_list() {
                    let mc = DamConfig {
                        variant,
                        multimodal,
                        ..cfg.model.clone()
                    };
                    jobs.push((prep, mc, seed));
                }
            }
        }
    }
    let runs = run_grid(jobs, &cfg.train)?;
    Ok(ComparativeReport {
        improvements: improvements(&runs),
        persistence: persistence_baseline(&stationary.val)?,
        fingerprint: stationary.fingerprint.clone(),
        runs,
    })
}

/// Results table; raw-mode errors go to `median_ae_usd`, stationary-mode
/// errors to `median_ae_star_usd`.
pub fn results_csv(rows: &[MetricsReport], persistence: Option<(&Evaluation, &str)>) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let (mae, star) = if r.stationary {
            (String::new(), r.median_ae_usd.to_string())
        } else {
            (r.median_ae_usd.to_string(), String::new())
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{mae},{star},{},{},{}",
            r.variant, r.stationary, r.multimodal, r.seed, r.mape, r.best_epoch, r.fingerprint
        );
    }
    if let Some((p, fp)) = persistence {
        let _ = writeln!(
            out,
            "persistence,,,,{},{},{},,{fp}",
            p.median_ae_usd, p.median_ae_usd, p.mape
        );
    }
    out
}

pub fn improvements_csv(rows: &[Improvement]) -> String {
    let mut out = String::from("stationary,multimodal,metric,concat_only,full,relative_improvement\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.stationary, r.multimodal, r.metric, r.concat_only, r.full, r.relative
        );
    }
    out
}

/// Writes weights, manifest, model config and `report.json` for one run.
pub fn save_run(dir: &Path, out: &RunOutput) -> Result<()> {
    out.model.save(dir)?;
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| TrainError::Io(e.to_string()))?;
    fs::write(dir.join("report.json"), json).map_err(|e| TrainError::Io(format!("{}: {e}", dir.display())))?;
    let preds = out
        .evaluation
        .predicted_usd
        .iter()
        .zip(&out.evaluation.actual_usd)
        .fold(String::from("predicted_usd,actual_usd\n"), |mut s, (p, a)| {
            let _ = writeln!(s, "{p},{a}");
            s
        });
    fs::write(dir.join("predictions.csv"), preds).map_err(|e| TrainError::Io(format!("{}: {e}", dir.display())))?;
    Ok(())
}
