use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One parameter tensor (flattened) with its gradient.
pub struct ParamMut<'a> {
    pub name: &'a str,
    pub values: &'a mut [f64],
    pub grad: &'a [f64],
    /// Weight matrices decay, biases do not.
    pub decay: bool,
}

/// Adam with decoupled weight decay. Moment buffers are created on the first
/// step and must keep matching the parameter list afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut [ParamMut<'_>], lr: f64, weight_decay: f64) -> Result<()> {
        for p in params.iter() {
            if p.grad.len() != p.values.len() {
                return Err(Error::Contract(format!(
                    "gradient for {} has {} entries, parameter has {}",
                    p.name,
                    p.grad.len(),
                    p.values.len()
                )));
            }
            if let Some(i) = p.grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient {} at {}[{i}] (optimizer step {})",
                    p.grad[i], p.name, self.step + 1
                )));
            }
        }
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| vec![0.0; p.values.len()]).collect();
            self.second_moment = self.first_moment.clone();
        }
        let shapes_match = self.first_moment.len() == params.len()
            && self.first_moment.iter().zip(params.iter()).all(|(m, p)| m.len() == p.values.len());
        if !shapes_match {
            return Err(Error::Contract("optimizer moments do not match the parameter list".into()));
        }

        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let bias1 = 1.0 - beta1.powi(self.step as i32);
        let bias2 = 1.0 - beta2.powi(self.step as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first_moment).zip(&mut self.second_moment) {
            let shrink = if p.decay { 1.0 - lr * weight_decay } else { 1.0 };
            for (((w, &g), m), v) in p.values.iter_mut().zip(p.grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *w = *w * shrink - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_scalar(adam: &mut Adam, w: &mut f64, g: f64, lr: f64, wd: f64) -> Result<()> {
        let mut values = [*w];
        let grad = [g];
        adam.step(
            &mut [ParamMut { name: "w", values: &mut values, grad: &grad, decay: true }],
            lr,
            wd,
        )?;
        *w = values[0];
        Ok(())
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut adam = Adam::new(AdamConfig::default());
        let mut w = 1.25;
        step_scalar(&mut adam, &mut w, 0.0, 0.01, 0.0).unwrap();
        assert_eq!(w, 1.25);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02, 1e4] {
            let mut adam = Adam::new(AdamConfig::default());
            let mut w = 0.5;
            step_scalar(&mut adam, &mut w, g, 1e-3, 0.0).unwrap();
            assert!(((0.5 - w).abs() - 1e-3).abs() < 1e-3 * 1e-5, "g={g} w={w}");
            assert_eq!((0.5 - w).signum(), g.signum());
        }
    }

    #[test]
    fn descends_a_quadratic_bowl() {
        let f = |w: f64| (w - 2.0) * (w - 2.0);
        let mut adam = Adam::new(AdamConfig::default());
        let mut w = -1.0;
        let mut last = f(w);
        for _ in 0..2 {
            let g = 2.0 * (w - 2.0);
            step_scalar(&mut adam, &mut w, g, 0.1, 0.0).unwrap();
            assert!(f(w) < last);
            last = f(w);
        }
    }

    #[test]
    fn decoupled_decay_only_on_weights() {
        let mut adam = Adam::new(AdamConfig::default());
        let mut w = [2.0];
        let mut b = [2.0];
        let zeros = [0.0];
        adam.step(
            &mut [
                ParamMut { name: "w", values: &mut w, grad: &zeros, decay: true },
                ParamMut { name: "b", values: &mut b, grad: &zeros, decay: false },
            ],
            0.1,
            0.5,
        )
        .unwrap();
        assert!((w[0] - 2.0 * (1.0 - 0.05)).abs() < 1e-15);
        assert_eq!(b[0], 2.0);
    }

    #[test]
    fn rejects_non_finite_gradients() {
        let mut adam = Adam::new(AdamConfig::default());
        let mut w = 0.0;
        let err = step_scalar(&mut adam, &mut w, f64::NAN, 0.1, 0.0).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
        assert!(err.to_string().contains("w[0]"));
    }
}
