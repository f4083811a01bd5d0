//! The end-to-end model: attention-weighted counts, adaptive Gram matrix,
//! kernel rows fed to an MLP, softmax cross-entropy. Hand-differentiated.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{attention_forward, score_backward, AttentionGrads, AttentionOutput, AttentionParams};
use crate::error::{Error, Result};
use crate::kernel::{weighted_gram, weighted_gram_backward, SparseColumns};
use crate::nn::{cross_entropy_loss, mlp_backward, mlp_forward, Adam, AdamConfig, MlpCache, MlpGrads, MlpParams, ParamMut};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Hidden width `C` of the attention scorer.
    pub att_hid: usize,
    /// Hidden widths of the classifier, e.g. `[nhid1, nhid2]`.
    pub hidden: Vec<usize>,
    /// `false` freezes the scores at `1/L` (plain kernel rows).
    pub adaptive: bool,
}

/// Everything needed to resume training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub config: ModelConfig,
    pub attention: AttentionParams,
    pub mlp: MlpParams,
    pub optimizer: Adam,
    pub epoch: usize,
    pub seed: u64,
}

impl TrainState {
    /// Seeded initialisation for `num_graphs` kernel columns, `num_features`
    /// substructure features and `num_classes` outputs.
    pub fn new(
        config: ModelConfig,
        num_graphs: usize,
        num_features: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::Argument("feature matrix has no columns".into()));
        }
        if config.att_hid == 0 {
            return Err(Error::Argument("attention width must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attention = if config.adaptive {
            AttentionParams::init(num_features, config.att_hid, &mut rng)
        } else {
            AttentionParams::zeros(num_features, config.att_hid)
        };
        let mut dims = vec![num_graphs];
        dims.extend(&config.hidden);
        dims.push(num_classes);
        let mlp = MlpParams::init(&dims, &mut rng)?;
        Ok(TrainState {
            config,
            attention,
            mlp,
            optimizer: Adam::new(AdamConfig::default()),
            epoch: 0,
            seed,
        })
    }

    /// Trainable parameters in a fixed order: `W1`, `W2` (adaptive only), then
    /// weight and bias of every classifier layer.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.config.adaptive {
            out.extend(self.attention.w1().iter());
            out.extend(self.attention.w2().iter());
        }
        for l in &self.mlp.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.flat_params().len() {
            return Err(Error::Argument("flat parameter length mismatch".into()));
        }
        let mut it = flat.iter().copied();
        if self.config.adaptive {
            let (w1, w2) = self.attention.weights_mut();
            w1.iter_mut().chain(w2.iter_mut()).for_each(|v| *v = it.next().unwrap());
        }
        for l in &mut self.mlp.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = serde_json::json!({ "version": CHECKPOINT_VERSION, "state": self });
        let text = serde_json::to_string(&doc)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: serde_json::Value = serde_json::from_str(&text)?;
        let version = doc.get("version").and_then(|v| v.as_u64());
        if version != Some(CHECKPOINT_VERSION as u64) {
            return Err(Error::format(path, 1, format!("unsupported checkpoint version {version:?}")));
        }
        Ok(serde_json::from_value(doc["state"].take())?)
    }
}

/// Intermediates of one forward pass over a set of kernel rows.
#[derive(Debug, Clone)]
pub struct Forward {
    pub attention: AttentionOutput,
    pub kernel: Array2<f64>,
    /// Graph indices whose kernel rows were classified.
    pub rows: Vec<usize>,
    pub logits: Array2<f64>,
    pub mlp_cache: MlpCache,
    /// Nonzero counts the kernel was built from.
    pub columns: Arc<SparseColumns>,
}

impl Forward {
    /// Smallest pre-activation magnitude over every ReLU in the model.
    pub fn min_relu_margin(&self) -> f64 {
        let att = self
            .attention
            .cache
            .as_ref()
            .map_or(f64::INFINITY, |c| c.pre_activation.fold(f64::INFINITY, |m, v| m.min(v.abs())));
        att.min(self.mlp_cache.min_hidden_magnitude())
    }

    pub fn predictions(&self) -> Vec<usize> {
        argmax_rows(self.logits.view())
    }
}

pub fn argmax_rows(logits: ArrayView2<'_, f64>) -> Vec<usize> {
    logits
        .axis_iter(Axis(0))
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect()
}

/// Runs attention, the Gram matrix and the classifier for the kernel rows of
/// graphs `rows`. `x` is the full `N x L` count matrix.
pub fn forward(state: &TrainState, x: ArrayView2<'_, f64>, rows: &[usize]) -> Result<Forward> {
    forward_sparse(state, x, &Arc::new(SparseColumns::from_dense(x)), rows)
}

fn forward_sparse(
    state: &TrainState,
    x: ArrayView2<'_, f64>,
    columns: &Arc<SparseColumns>,
    rows: &[usize],
) -> Result<Forward> {
    let attention = attention_forward(x, &state.attention)?;
    let kernel = weighted_gram(columns, attention.scores.mapv(|a| a * a).view());
    forward_with_kernel(state, attention, kernel, columns, rows)
}

fn forward_with_kernel(
    state: &TrainState,
    attention: AttentionOutput,
    kernel: Array2<f64>,
    columns: &Arc<SparseColumns>,
    rows: &[usize],
) -> Result<Forward> {
    if let Some(&bad) = rows.iter().find(|&&r| r >= kernel.nrows()) {
        return Err(Error::Argument(format!("row {bad} out of range")));
    }
    let batch = kernel.select(Axis(0), rows);
    let (logits, mlp_cache) = mlp_forward(batch.view(), &state.mlp)?;
    Ok(Forward {
        attention,
        kernel,
        rows: rows.to_vec(),
        logits,
        mlp_cache,
        columns: Arc::clone(columns),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    /// `None` when the attention is frozen.
    pub attention: Option<AttentionGrads>,
    pub mlp: MlpGrads,
}

impl ModelGrads {
    /// Same order as [`TrainState::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(a) = &self.attention {
            out.extend(a.w1.iter());
            out.extend(a.w2.iter());
        }
        for (w, b) in self.mlp.weights.iter().zip(&self.mlp.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

/// Cross-entropy over the classified rows whose position in `fwd.rows` is
/// listed in `loss_rows`, and the gradients of that loss.
pub fn backward(
    state: &TrainState,
    fwd: &Forward,
    loss_rows: &[usize],
    labels: &[usize],
) -> Result<(f64, ModelGrads)> {
    let picked = fwd.logits.select(Axis(0), loss_rows);
    let (loss, grad_picked) = cross_entropy_loss(picked.view(), labels)?;
    let mut grad_logits = Array2::zeros(fwd.logits.dim());
    for (i, &r) in loss_rows.iter().enumerate() {
        grad_logits.row_mut(r).assign(&grad_picked.row(i));
    }
    let (mlp_grads, grad_batch) = mlp_backward(&state.mlp, &fwd.mlp_cache, grad_logits.view());

    let attention = if state.config.adaptive {
        let n = fwd.kernel.nrows();
        let mut grad_k = Array2::zeros((n, n));
        for (i, &r) in fwd.rows.iter().enumerate() {
            let mut row = grad_k.row_mut(r);
            row += &grad_batch.row(i);
        }
        // K = sum_l alpha_l^2 x_l x_lᵀ
        let grad_scores = weighted_gram_backward(grad_k.view(), &fwd.columns) * &fwd.attention.scores * 2.0;
        Some(score_backward(grad_scores.view(), &fwd.attention, &state.attention)?)
    } else {
        None
    };
    Ok((loss, ModelGrads { attention, mlp: mlp_grads }))
}

/// Loss of `labels` on kernel rows `rows` and its gradients.
pub fn loss_and_grads(
    state: &TrainState,
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    labels: &[usize],
) -> Result<(f64, ModelGrads, Forward)> {
    let fwd = forward(state, x, rows)?;
    let all: Vec<usize> = (0..rows.len()).collect();
    let (loss, grads) = backward(state, &fwd, &all, labels)?;
    Ok((loss, grads, fwd))
}

/// One Adam step on every trainable tensor.
pub fn backward_and_step(state: &mut TrainState, grads: &ModelGrads, lr: f64, weight_decay: f64) -> Result<()> {
    let TrainState { attention, mlp, optimizer, config, .. } = state;
    // Gradients may come out of the backward pass transposed.
    let att_grads;
    let mlp_weight_grads: Vec<_> = grads.mlp.weights.iter().map(|w| w.as_standard_layout()).collect();
    let mut params: Vec<ParamMut<'_>> = Vec::new();
    if config.adaptive {
        let g = grads
            .attention
            .as_ref()
            .ok_or_else(|| Error::Contract("adaptive model needs attention gradients".into()))?;
        att_grads = (g.w1.as_standard_layout(), g.w2.as_standard_layout());
        let (w1, w2) = attention.weights_mut();
        params.push(ParamMut {
            name: "attention.w1",
            values: w1.as_slice_mut().expect("standard layout"),
            grad: att_grads.0.as_slice().expect("standard layout"),
            decay: true,
        });
        params.push(ParamMut {
            name: "attention.w2",
            values: w2.as_slice_mut().expect("standard layout"),
            grad: att_grads.1.as_slice().expect("standard layout"),
            decay: true,
        });
    }
    if grads.mlp.weights.len() != mlp.layers.len() {
        return Err(Error::Contract("classifier gradient has the wrong depth".into()));
    }
    for (layer, (gw, gb)) in mlp.layers.iter_mut().zip(mlp_weight_grads.iter().zip(&grads.mlp.biases)) {
        params.push(ParamMut {
            name: "mlp.weight",
            values: layer.weight.as_slice_mut().expect("standard layout"),
            grad: gw.as_slice().expect("standard layout"),
            decay: true,
        });
        params.push(ParamMut {
            name: "mlp.bias",
            values: layer.bias.as_slice_mut().expect("standard layout"),
            grad: gb.as_slice().expect("standard layout"),
            decay: false,
        });
    }
    optimizer
        .step(&mut params, lr, weight_decay)
        .map_err(|e| e.context(format!("epoch {}", state.epoch + 1)))?;
    state.epoch += 1;
    Ok(())
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub weight_decay: f64,
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    /// Accuracy in `[0, 1]` on the test rows after the final epoch.
    pub test_accuracy: f64,
    pub curve: Vec<EpochRecord>,
    pub final_scores: Array1<f64>,
    /// Attention scores after every epoch, when requested.
    pub attention_trace: Option<Vec<Array1<f64>>>,
    pub state: TrainState,
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Full-batch training on the kernel rows of `train`, evaluated on `test`.
///
/// Every graph contributes its structure to the attention pooling and the
/// kernel columns; only `labels[train]` enter the loss. `labels[test]` are
/// read only to score predictions.
pub fn train_fold(
    mut state: TrainState,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    train: &[usize],
    test: &[usize],
    cfg: &TrainConfig,
    record_attention: bool,
) -> Result<FoldOutcome> {
    let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let rows: Vec<usize> = train.iter().chain(test).copied().collect();
    let loss_rows: Vec<usize> = (0..train.len()).collect();
    let columns = Arc::new(SparseColumns::from_dense(x));
    let frozen = if state.config.adaptive {
        None
    } else {
        let att = attention_forward(x, &state.attention)?;
        let k = weighted_gram(&columns, att.scores.mapv(|a| a * a).view());
        Some((att, k))
    };
    let run_forward = |state: &TrainState| -> Result<Forward> {
        match &frozen {
            Some((att, k)) => forward_with_kernel(state, att.clone(), k.clone(), &columns, &rows),
            None => forward_sparse(state, x, &columns, &rows),
        }
    };

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut trace = record_attention.then(Vec::new);
    for epoch in 1..=cfg.epochs {
        let fwd = run_forward(&state)?;
        let (loss, grads) = backward(&state, &fwd, &loss_rows, &train_labels)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss {loss} at epoch {epoch}")));
        }
        let pred = fwd.predictions();
        let (pred_train, pred_test) = pred.split_at(train.len());
        let test_truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        curve.push(EpochRecord {
            epoch,
            train_loss: loss,
            train_acc: accuracy(pred_train, &train_labels),
            test_acc: accuracy(pred_test, &test_truth),
        });
        backward_and_step(&mut state, &grads, cfg.lr, cfg.weight_decay)?;
        if let Some(t) = trace.as_mut() {
            let h = crate::attention::aggregate_channels(x)?;
            t.push(crate::attention::attention_scores(h.view(), &state.attention)?);
        }
    }

    let fwd = run_forward(&state)?;
    let pred = fwd.predictions();
    let test_truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    Ok(FoldOutcome {
        test_accuracy: accuracy(&pred[train.len()..], &test_truth),
        curve,
        final_scores: fwd.attention.scores.clone(),
        attention_trace: trace,
        state,
    })
}

/// Smallest ReLU input magnitude accepted at a finite-difference probe point.
pub const KINK_MARGIN: f64 = 1e-3;

/// Finite-difference check of the whole model (attention, Gram matrix,
/// classifier, cross-entropy) on random toy counts: `num_graphs` graphs,
/// `num_features` features and attention width `att_hid`.
///
/// Initialisations whose ReLU inputs come within [`KINK_MARGIN`] of zero are
/// skipped by advancing the parameter seed.
pub fn check_model_gradients(
    seed: u64,
    num_graphs: usize,
    num_features: usize,
    att_hid: usize,
    eps: f64,
    tolerance: f64,
) -> Result<crate::nn::GradCheckReport> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((num_graphs, num_features), || rng.random_range(0..=4) as f64);
    let labels: Vec<usize> = (0..num_graphs).map(|i| i % 2).collect();
    let rows: Vec<usize> = (0..num_graphs).collect();
    let config = ModelConfig {
        att_hid,
        hidden: vec![5, 4],
        adaptive: true,
    };
    let mut chosen = None;
    for attempt in 0..1000u64 {
        let state = TrainState::new(config.clone(), num_graphs, num_features, 2, seed.wrapping_add(attempt))?;
        let fwd = forward(&state, x.view(), &rows)?;
        if fwd.min_relu_margin() >= KINK_MARGIN {
            chosen = Some(state);
            break;
        }
    }
    let state = chosen.ok_or_else(|| Error::Training("no kink-free probe point found".into()))?;
    let (_, grads, _) = loss_and_grads(&state, x.view(), &rows, &labels)?;
    let theta = state.flat_params();
    let analytic = grads.flatten();
    let mut probe = state.clone();
    let loss = |t: &[f64]| {
        probe.set_flat_params(t).expect("same length");
        let fwd = forward(&probe, x.view(), &rows).expect("forward");
        cross_entropy_loss(fwd.logits.view(), &labels).expect("labels").0
    };
    Ok(crate::nn::gradient_check(loss, &theta, &analytic, eps, tolerance, 200, &mut rng))
}
