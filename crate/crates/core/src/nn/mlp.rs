use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y = x W + b` with `W` stored as `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// A stack of linear layers with ReLU between consecutive layers and no
/// activation after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Linear>,
}

impl MlpParams {
    pub fn new(layers: Vec<Linear>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Argument("an MLP needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::Argument(format!("layer {i}: bias length mismatch")));
            }
            if !l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::Argument(format!("layer {i}: non-finite parameter")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Argument(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(MlpParams { layers })
    }

    /// Fan-in uniform weights and zero biases for widths `dims[0] -> ... -> dims[k]`.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Argument(format!("invalid layer widths {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| Linear {
                weight: super::fan_in_uniform(w[0], w[1], rng),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        MlpParams::new(layers)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let layers = dims
            .windows(2)
            .map(|w| Linear {
                weight: Array2::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        MlpParams::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim()
    }
}

/// Layer inputs and pre-activations from a forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input of every layer (`inputs[0]` is the batch itself).
    pub inputs: Vec<Array2<f64>>,
    /// `x W + b` of every layer before the ReLU.
    pub pre_activations: Vec<Array2<f64>>,
}

impl MlpCache {
    /// Smallest `|z|` over all hidden ReLU inputs; used to stay clear of kinks
    /// when comparing against finite differences.
    pub fn min_hidden_magnitude(&self) -> f64 {
        let n = self.pre_activations.len();
        self.pre_activations[..n.saturating_sub(1)]
            .iter()
            .flat_map(|z| z.iter())
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Class logits for each row of `rows`.
pub fn mlp_forward(rows: ArrayView2<'_, f64>, p: &MlpParams) -> Result<(Array2<f64>, MlpCache)> {
    if rows.ncols() != p.input_dim() {
        return Err(Error::Argument(format!(
            "rows have {} entries but the first layer takes {}",
            rows.ncols(),
            p.input_dim()
        )));
    }
    let last = p.layers.len() - 1;
    let mut inputs = Vec::with_capacity(p.layers.len());
    let mut pre_activations = Vec::with_capacity(p.layers.len());
    let mut x = rows.to_owned();
    for (i, layer) in p.layers.iter().enumerate() {
        let z = x.dot(&layer.weight) + &layer.bias;
        inputs.push(x);
        x = if i < last { z.mapv(|v| v.max(0.0)) } else { z.clone() };
        pre_activations.push(z);
    }
    Ok((x, MlpCache { inputs, pre_activations }))
}

/// Parameter gradients and the gradient w.r.t. the input rows.
pub fn mlp_backward(p: &MlpParams, cache: &MlpCache, grad_logits: ArrayView2<'_, f64>) -> (MlpGrads, Array2<f64>) {
    let k = p.layers.len();
    let mut weights = Vec::with_capacity(k);
    let mut biases = Vec::with_capacity(k);
    let mut grad = grad_logits.to_owned();
    for i in (0..k).rev() {
        if i < k - 1 {
            ndarray::Zip::from(&mut grad)
                .and(&cache.pre_activations[i])
                .for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
        }
        weights.push(cache.inputs[i].t().dot(&grad));
        biases.push(grad.sum_axis(Axis(0)));
        grad = grad.dot(&p.layers[i].weight.t());
    }
    weights.reverse();
    biases.reverse();
    (MlpGrads { weights, biases }, grad)
}
