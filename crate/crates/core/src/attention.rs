//! Feature-channel attention over substructure counts.
//!
//! The count matrix `X` (`N x L`) is pooled into one channel descriptor
//! `h = mean over rows`, scored by two bias-free dense layers
//! `alpha = softmax(relu(h W1) W2)` and broadcast back over the rows:
//! `X'[r][l] = alpha[l] * X[r][l]`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the two scoring layers: `w1` is `L x C`, `w2` is `C x L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    w1: Array2<f64>,
    w2: Array2<f64>,
    /// Bumped on every mutable access so forward caches can detect staleness.
    #[serde(skip)]
    generation: u64,
}

impl AttentionParams {
    pub fn new(w1: Array2<f64>, w2: Array2<f64>) -> Result<Self> {
        let (l, c) = w1.dim();
        if w2.dim() != (c, l) {
            return Err(Error::Argument(format!(
                "attention weights do not chain: W1 is {l}x{c}, W2 is {:?}",
                w2.dim()
            )));
        }
        if !w1.iter().chain(w2.iter()).all(|v| v.is_finite()) {
            return Err(Error::Argument("non-finite attention weight".into()));
        }
        Ok(AttentionParams { w1, w2, generation: 0 })
    }

    pub fn zeros(num_features: usize, hidden: usize) -> Self {
        AttentionParams {
            w1: Array2::zeros((num_features, hidden)),
            w2: Array2::zeros((hidden, num_features)),
            generation: 0,
        }
    }

    /// Fan-in uniform initialisation `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init<R: Rng + ?Sized>(num_features: usize, hidden: usize, rng: &mut R) -> Self {
        AttentionParams {
            w1: crate::nn::fan_in_uniform(num_features, hidden, rng),
            w2: crate::nn::fan_in_uniform(hidden, num_features, rng),
            generation: 0,
        }
    }

    pub fn num_features(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    /// Mutable access to `(W1, W2)`. Invalidates outstanding forward caches.
    pub fn weights_mut(&mut self) -> (&mut Array2<f64>, &mut Array2<f64>) {
        self.generation = self.generation.wrapping_add(1);
        (&mut self.w1, &mut self.w2)
    }
}

/// Column means of `x`.
pub fn aggregate_channels(x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if x.nrows() == 0 {
        return Err(Error::Argument("cannot pool an empty feature matrix".into()));
    }
    Ok(x.mean_axis(Axis(0)).expect("nonempty"))
}

/// Max-shifted softmax of a vector.
pub fn softmax(z: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let e = z.mapv(|v| (v - max).exp());
    let s = e.sum();
    e / s
}

/// Intermediates of the scoring path kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ScoreCache {
    pub h: Array1<f64>,
    /// `h W1` before the ReLU.
    pub pre_activation: Array1<f64>,
    pub hidden: Array1<f64>,
    generation: u64,
}

fn score_forward(h: ArrayView1<'_, f64>, p: &AttentionParams) -> Result<(Array1<f64>, ScoreCache)> {
    if h.len() != p.num_features() {
        return Err(Error::Argument(format!(
            "descriptor has {} entries but attention expects {}",
            h.len(),
            p.num_features()
        )));
    }
    let pre = h.dot(&p.w1);
    let hidden = pre.mapv(|v| v.max(0.0));
    let logits = hidden.dot(&p.w2);
    let scores = softmax(logits.view());
    Ok((
        scores,
        ScoreCache {
            h: h.to_owned(),
            pre_activation: pre,
            hidden,
            generation: p.generation,
        },
    ))
}

/// `softmax(relu(h W1) W2)`.
pub fn attention_scores(h: ArrayView1<'_, f64>, p: &AttentionParams) -> Result<Array1<f64>> {
    score_forward(h, p).map(|(s, _)| s)
}

#[derive(Debug, Clone)]
pub struct AttentionOutput {
    pub scores: Array1<f64>,
    pub weighted: Array2<f64>,
    /// Present only when produced by [`attention_forward`].
    pub cache: Option<ScoreCache>,
}

/// Scales column `l` of `x` by `scores[l]`.
pub fn apply_attention(x: ArrayView2<'_, f64>, scores: ArrayView1<'_, f64>) -> Result<AttentionOutput> {
    if scores.len() != x.ncols() {
        return Err(Error::Argument(format!(
            "{} scores for {} features",
            scores.len(),
            x.ncols()
        )));
    }
    Ok(AttentionOutput {
        scores: scores.to_owned(),
        weighted: &x * &scores,
        cache: None,
    })
}

/// Pool, score and reweight in one pass, keeping the backward cache.
pub fn attention_forward(x: ArrayView2<'_, f64>, p: &AttentionParams) -> Result<AttentionOutput> {
    let h = aggregate_channels(x)?;
    let (scores, cache) = score_forward(h.view(), p)?;
    let mut out = apply_attention(x, scores.view())?;
    out.cache = Some(cache);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrads {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

fn checked_cache<'a>(out: &'a AttentionOutput, p: &AttentionParams) -> Result<&'a ScoreCache> {
    let cache = out
        .cache
        .as_ref()
        .ok_or_else(|| Error::Contract("attention output carries no forward cache".into()))?;
    if cache.generation != p.generation || cache.h.len() != p.num_features() {
        return Err(Error::Contract(
            "attention cache is stale: parameters changed since the forward pass".into(),
        ));
    }
    Ok(cache)
}

/// Gradients of the loss w.r.t. `W1` and `W2` given `dLoss/dX'`.
///
/// The pooled descriptor depends only on the constant counts, so nothing flows
/// back into `x`.
pub fn attention_backward(
    grad_weighted: ArrayView2<'_, f64>,
    out: &AttentionOutput,
    x: ArrayView2<'_, f64>,
    p: &AttentionParams,
) -> Result<AttentionGrads> {
    checked_cache(out, p)?;
    if grad_weighted.dim() != x.dim() || x.ncols() != p.num_features() {
        return Err(Error::Contract(format!(
            "gradient {:?} / features {:?} do not match {} attention features",
            grad_weighted.dim(),
            x.dim(),
            p.num_features()
        )));
    }
    // dL/dalpha_l = sum_r G[r][l] X[r][l]
    let grad_scores = (&grad_weighted * &x).sum_axis(Axis(0));
    score_backward(grad_scores.view(), out, p)
}

/// Gradients of the loss w.r.t. `W1` and `W2` given `dLoss/dalpha`.
pub fn score_backward(
    grad_scores: ArrayView1<'_, f64>,
    out: &AttentionOutput,
    p: &AttentionParams,
) -> Result<AttentionGrads> {
    let cache = checked_cache(out, p)?;
    if grad_scores.len() != p.num_features() {
        return Err(Error::Contract(format!(
            "{} score gradients for {} attention features",
            grad_scores.len(),
            p.num_features()
        )));
    }
    // softmax Jacobian-vector product
    let alpha = &out.scores;
    let inner = grad_scores.dot(alpha);
    let grad_logits = alpha * &grad_scores.mapv(|g| g - inner);

    let grad_w2 = outer(cache.hidden.view(), grad_logits.view());
    let grad_hidden = p.w2.dot(&grad_logits);
    let grad_pre = ndarray::Zip::from(&grad_hidden)
        .and(&cache.pre_activation)
        .map_collect(|&g, &z| if z > 0.0 { g } else { 0.0 });
    let grad_w1 = outer(cache.h.view(), grad_pre.view());
    Ok(AttentionGrads { w1: grad_w1, w2: grad_w2 })
}

fn outer(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Array2<f64> {
    let col = a.insert_axis(Axis(1));
    let row = b.insert_axis(Axis(0));
    col.dot(&row)
}
