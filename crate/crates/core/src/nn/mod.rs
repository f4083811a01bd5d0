//! Dense-network numerics: fully connected layers with ReLU, softmax
//! cross-entropy, Adam with decoupled weight decay and a finite-difference
//! gradient checker.

mod adam;
mod gradcheck;
mod loss;
mod mlp;

pub use adam::{Adam, AdamConfig, ParamMut};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use loss::{cross_entropy_loss, softmax_rows};
pub use mlp::{mlp_backward, mlp_forward, Linear, MlpCache, MlpGrads, MlpParams};

use ndarray::Array2;
use rand::Rng;

/// `fan_in x fan_out` matrix drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn fan_in_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound))
}
