//! Proximal Adagrad: per-coordinate adaptive steps with optional l1
//! shrinkage applied after the gradient step.

use crate::model::Params;

/// Optimizer state: one squared-gradient accumulator per parameter.
pub struct ProximalAdagrad {
    pub learning_rate: f64,
    pub l1_reg: f64,
    accumulators: Vec<Vec<f64>>,
}

impl ProximalAdagrad {
    /// `accumulator_init` seeds every accumulator entry, so the first step
    /// is `w - lr * g / sqrt(init + g^2)`.
    pub fn new(params: &Params, learning_rate: f64, l1_reg: f64, accumulator_init: f64) -> Self {
        Self {
            learning_rate,
            l1_reg,
            accumulators: params
                .tensors
                .iter()
                .map(|t| vec![accumulator_init; t.data.len()])
                .collect(),
        }
    }

    /// Apply one update in place. Math runs in f64; parameters round back
    /// to their f32 storage.
    pub fn step(&mut self, params: &mut Params, grads: &[Vec<f64>]) {
        assert_eq!(grads.len(), params.tensors.len(), "gradient group count");
        for ((tensor, acc), grad) in params
            .tensors
            .iter_mut()
            .zip(self.accumulators.iter_mut())
            .zip(grads.iter())
        {
            for ((w, a), &g) in tensor.data.iter_mut().zip(acc.iter_mut()).zip(grad.iter()) {
                *a += g * g;
                let step = self.learning_rate / a.sqrt();
                let mut updated = *w as f64 - step * g;
                if self.l1_reg > 0.0 {
                    let shrink = step * self.l1_reg;
                    updated = updated.signum() * (updated.abs() - shrink).max(0.0);
                }
                *w = updated as f32;
            }
        }
    }
}
