use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam optimizer state with bias correction. One state can drive several
/// parameter segments (e.g. the lanes of a fused network) as long as they are
/// always passed in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    /// Defaults: lr 1e-3, betas (0.9, 0.999), eps 1e-8.
    pub fn new(n_params: usize) -> Self {
        Self::with_lr(n_params, 1e-3)
    }

    pub fn with_lr(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.step_segments(&mut [(params, grads)])
    }

    /// One Adam step over consecutive segments sharing this state.
    pub fn step_segments(&mut self, segments: &mut [(&mut [f64], &[f64])]) -> Result<()> {
        let total: usize = segments.iter().map(|(p, _)| p.len()).sum();
        if total != self.m.len() {
            return Err(Error::Shape {
                expected: self.m.len(),
                got: total,
            });
        }
        if let Some((p, g)) = segments.iter().find(|(p, g)| p.len() != g.len()) {
            return Err(Error::Shape {
                expected: p.len(),
                got: g.len(),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut k = 0;
        for (params, grads) in segments.iter_mut() {
            for (p, &g) in params.iter_mut().zip(grads.iter()) {
                let m = &mut self.m[k];
                let v = &mut self.v[k];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
        Ok(())
    }
}
