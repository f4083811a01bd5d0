//! Repeated stratified k-fold evaluation, WL iteration sweeps and CSV/JSON
//! exports.

mod config;
mod cv;

pub use config::ExperimentConfig;
pub use cv::{derive_seed, stratified_kfold, Fold};

use std::fmt::Write as _;
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{feature_matrix, FeatureId, KernelKind};
use crate::graph::GraphDataset;
use crate::model::{train_fold, EpochRecord, ModelConfig, TrainConfig, TrainState};

/// Fold index reserved for the seed of each repeat's partition.
const SPLIT_STREAM: usize = 0xFFFF_FFFF;

/// Result of [`run_akbr`]. Accuracies are percentages.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub num_graphs: usize,
    pub num_features: usize,
    /// `fold_accuracies[repeat][fold]`
    pub fold_accuracies: Vec<Vec<f64>>,
    pub mean_accuracy: f64,
    /// Sample standard deviation over all repeat x fold scores divided by the
    /// square root of their count.
    pub std_error: f64,
    /// Attention scores after training, averaged over all runs.
    pub mean_final_attention: Vec<f64>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
    #[serde(skip)]
    pub artifacts: RunArtifacts,
}

/// Bulky per-run outputs kept out of the JSON report.
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub feature_ids: Vec<FeatureId>,
    /// `(repeat, fold, curve)` for every run.
    pub curves: Vec<(usize, usize, Vec<EpochRecord>)>,
    /// Scores after every epoch of repeat 0, fold 0.
    pub attention_trace: Vec<Array1<f64>>,
    /// Final state of repeat 0, fold 0.
    pub first_state: Option<TrainState>,
}

impl ExperimentReport {
    pub fn all_scores(&self) -> Vec<f64> {
        self.fold_accuracies.iter().flatten().copied().collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `repeat,fold,epoch,train_loss,train_acc,test_acc`
    pub fn loss_curve_csv(&self) -> String {
        let mut out = String::from("repeat,fold,epoch,train_loss,train_acc,test_acc\n");
        for (r, f, curve) in &self.artifacts.curves {
            for e in curve {
                let _ = writeln!(out, "{r},{f},{},{},{},{}", e.epoch, e.train_loss, e.train_acc, e.test_acc);
            }
        }
        out
    }

    /// `epoch,feature_id,score` for every epoch of the first run.
    pub fn attention_trace_csv(&self) -> String {
        let mut out = String::from("epoch,feature_id,score\n");
        for (e, scores) in self.artifacts.attention_trace.iter().enumerate() {
            for (l, s) in scores.iter().enumerate() {
                let _ = writeln!(out, "{},{l},{s}", e + 1);
            }
        }
        out
    }
}

/// Mean and standard error (`sample std / sqrt(n)`) of `scores`.
pub fn mean_and_std_error(scores: &[f64]) -> (f64, f64) {
    let n = scores.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Repeated k-fold cross-validation of the attention-kernel classifier.
///
/// The feature vocabulary, attention pooling and kernel columns cover every
/// graph; the loss sees training labels only and test labels are used only to
/// score the final-epoch predictions.
pub fn run_akbr(config: &ExperimentConfig, dataset: &GraphDataset) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let features = feature_matrix(dataset, config.kernel, config.wl_iterations);
    if features.num_features() == 0 {
        return Err(Error::Argument(format!(
            "dataset {} yields no {} features",
            dataset.name(),
            config.kernel
        )));
    }
    let x = features.to_f64();
    let labels = dataset.class_labels();

    let mut jobs = Vec::new();
    for r in 0..config.repeats {
        let folds = stratified_kfold(labels, config.folds, derive_seed(config.seed, r, SPLIT_STREAM))?;
        for (f, fold) in folds.into_iter().enumerate() {
            jobs.push((r, f, fold));
        }
    }
    let model = ModelConfig {
        att_hid: config.att_hid,
        hidden: config.hidden_widths(),
        adaptive: config.adaptive,
    };
    let train_cfg = TrainConfig {
        lr: config.lr,
        epochs: config.epochs,
        weight_decay: config.weight_decay,
    };
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|(r, f, fold)| {
            let seed = derive_seed(config.seed, *r, *f);
            TrainState::new(model.clone(), dataset.len(), x.ncols(), dataset.num_classes(), seed)
                .and_then(|state| {
                    train_fold(state, x.view(), labels, &fold.train, &fold.test, &train_cfg, *r == 0 && *f == 0)
                })
                .map_err(|e| e.context(format!("repeat {r}, fold {f}")))
        })
        .collect();

    let mut fold_accuracies = vec![Vec::new(); config.repeats];
    let mut artifacts = RunArtifacts {
        feature_ids: features.feature_ids.clone(),
        ..Default::default()
    };
    let mut attention_sum = Array1::<f64>::zeros(x.ncols());
    for ((r, f, _), outcome) in jobs.iter().zip(outcomes) {
        let outcome = outcome?;
        fold_accuracies[*r].push(100.0 * outcome.test_accuracy);
        attention_sum += &outcome.final_scores;
        if let Some(trace) = outcome.attention_trace {
            artifacts.attention_trace = trace;
            artifacts.first_state = Some(outcome.state);
        }
        artifacts.curves.push((*r, *f, outcome.curve));
    }
    let scores: Vec<f64> = fold_accuracies.iter().flatten().copied().collect();
    let (mean_accuracy, std_error) = mean_and_std_error(&scores);
    Ok(ExperimentReport {
        config: config.clone(),
        num_graphs: dataset.len(),
        num_features: x.ncols(),
        fold_accuracies,
        mean_accuracy,
        std_error,
        mean_final_attention: (attention_sum / jobs.len() as f64).to_vec(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        artifacts,
    })
}

/// One WL run per iteration count in `iterations`.
pub fn sweep_wl_iterations(
    base: &ExperimentConfig,
    iterations: impl IntoIterator<Item = usize>,
    dataset: &GraphDataset,
) -> Result<Vec<ExperimentReport>> {
    if base.kernel != KernelKind::Wl {
        return Err(Error::Argument("iteration sweeps need the WL kernel".into()));
    }
    iterations
        .into_iter()
        .map(|i| {
            let cfg = ExperimentConfig {
                wl_iterations: i,
                ..base.clone()
            };
            run_akbr(&cfg, dataset).map_err(|e| e.context(format!("wl_iterations {i}")))
        })
        .collect()
}

/// `iteration,mean,stderr`
pub fn sweep_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from("iteration,mean,stderr\n");
    for r in reports {
        let _ = writeln!(out, "{},{},{}", r.config.wl_iterations, r.mean_accuracy, r.std_error);
    }
    out
}

/// `iteration,feature_id,score` for feature columns `0..k` of the WL runs with
/// iterations `1..=m`.
pub fn export_attention_heatmap(reports: &[ExperimentReport], k: usize, m: usize) -> Result<String> {
    let mut out = String::from("iteration,feature_id,score\n");
    for it in 1..=m {
        let report = reports
            .iter()
            .find(|r| r.config.kernel == KernelKind::Wl && r.config.wl_iterations == it)
            .ok_or_else(|| Error::Argument(format!("no WL run with {it} iterations")))?;
        let scores = &report.mean_final_attention;
        let kk = if k > scores.len() {
            log::warn!("requested {k} features but iteration {it} has only {}; clipping", scores.len());
            scores.len()
        } else {
            k
        };
        for (l, s) in scores.iter().take(kk).enumerate() {
            let _ = writeln!(out, "{it},{l},{s}");
        }
    }
    Ok(out)
}
