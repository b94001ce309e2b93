//! Minimal dense network engine: fully connected layers with ReLU or linear
//! activations, exact reverse-mode gradients, Huber loss and Adam.
//!
//! Parameters of an [`Mlp`] live in one flat `Vec<f64>`; per layer the
//! weights come first (row-major, `output x input`) followed by the biases.
//! Gradients use the same layout, which keeps the optimizer and checkpoints
//! oblivious to layer structure.

mod adam;
mod loss;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::AdamState;
pub use loss::huber_loss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDef {
    pub input_size: usize,
    pub output_size: usize,
    pub activation: Activation,
}

impl LayerDef {
    pub fn new(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Self {
            input_size,
            output_size,
            activation,
        }
    }

    fn param_count(&self) -> usize {
        self.input_size * self.output_size + self.output_size
    }
}

/// Builds `sizes[0] -> sizes[1] -> ...` with ReLU on every layer, except a
/// linear last layer when `linear_out` is set.
pub fn chain(sizes: &[usize], linear_out: bool) -> Vec<LayerDef> {
    let n = sizes.len().saturating_sub(1);
    (0..n)
        .map(|i| {
            let act = if linear_out && i + 1 == n {
                Activation::Linear
            } else {
                Activation::Relu
            };
            LayerDef::new(sizes[i], sizes[i + 1], act)
        })
        .collect()
}

/// Dense multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    defs: Vec<LayerDef>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// Values kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Post-activation output of layer `l`.
    pub fn layer_output(&self, l: usize) -> Option<&[f64]> {
        if l + 1 < self.inputs.len() {
            Some(&self.inputs[l + 1])
        } else if l + 1 == self.inputs.len() {
            Some(&self.output)
        } else {
            None
        }
    }
}

impl Mlp {
    /// All-zero network with the given layers.
    pub fn new(defs: Vec<LayerDef>) -> Result<Self> {
        if defs.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for s in &defs {
            if s.input_size == 0 || s.output_size == 0 {
                return Err(Error::config("layer sizes must be at least 1"));
            }
        }
        for w in defs.windows(2) {
            if w[0].output_size != w[1].input_size {
                return Err(Error::Shape {
                    expected: w[0].output_size,
                    got: w[1].input_size,
                });
            }
        }
        let mut offsets = Vec::with_capacity(defs.len());
        let mut total = 0;
        for s in &defs {
            offsets.push(total);
            total += s.param_count();
        }
        Ok(Self {
            defs,
            offsets,
            params: vec![0.0; total],
        })
    }

    /// Network with parameters taken from `params` (checkpoint loading).
    pub fn from_params(defs: Vec<LayerDef>, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::new(defs)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    /// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero
    /// biases.
    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for (l, s) in self.defs.iter().enumerate() {
            let limit = (6.0 / (s.input_size + s.output_size) as f64).sqrt();
            let off = self.offsets[l];
            let n_w = s.input_size * s.output_size;
            for w in &mut self.params[off..off + n_w] {
                *w = rng.random_range(-limit..limit);
            }
            self.params[off + n_w..off + s.param_count()].fill(0.0);
        }
    }

    pub fn defs(&self) -> &[LayerDef] {
        &self.defs
    }

    pub fn input_size(&self) -> usize {
        self.defs[0].input_size
    }

    pub fn output_size(&self) -> usize {
        self.defs[self.defs.len() - 1].output_size
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn weights(&self, l: usize) -> &[f64] {
        let s = &self.defs[l];
        &self.params[self.offsets[l]..self.offsets[l] + s.input_size * s.output_size]
    }

    fn bias(&self, l: usize) -> &[f64] {
        let s = &self.defs[l];
        let start = self.offsets[l] + s.input_size * s.output_size;
        &self.params[start..start + s.output_size]
    }

    /// Mutable view of layer `l`'s bias vector.
    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.defs[l];
        let start = self.offsets[l] + s.input_size * s.output_size;
        &mut self.params[start..start + s.output_size]
    }

    /// Forward pass keeping the activations needed by [`Mlp::backward`].
    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.input_size() {
            return Err(Error::Shape {
                expected: self.input_size(),
                got: input.len(),
            });
        }
        let mut inputs = Vec::with_capacity(self.defs.len());
        let mut pre_activations = Vec::with_capacity(self.defs.len());
        let mut x = input.to_vec();
        for (l, s) in self.defs.iter().enumerate() {
            let w = self.weights(l);
            let pre: Vec<f64> = self
                .bias(l)
                .iter()
                .enumerate()
                .map(|(o, b)| {
                    let row = &w[o * s.input_size..(o + 1) * s.input_size];
                    b + row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            let out = match s.activation {
                Activation::Relu => pre.iter().map(|&z| z.max(0.0)).collect(),
                Activation::Linear => pre.clone(),
            };
            inputs.push(std::mem::replace(&mut x, out));
            pre_activations.push(pre);
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
            output: x,
        })
    }

    /// Output only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.output)
    }

    /// Parameter gradients and input gradient for `dLoss/dOutput = grad_out`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grads = vec![0.0; self.params.len()];
        let input_grad = self.backward_into(cache, grad_out, &mut grads, true)?;
        Ok((grads, input_grad.unwrap_or_default()))
    }

    /// Accumulates parameter gradients into `grads`; returns the input
    /// gradient when asked for it.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad_out: &[f64],
        grads: &mut [f64],
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        if cache.inputs.len() != self.defs.len()
            || cache
                .inputs
                .iter()
                .zip(&self.defs)
                .any(|(x, s)| x.len() != s.input_size)
        {
            return Err(Error::MissingCache);
        }
        if grad_out.len() != self.output_size() {
            return Err(Error::Shape {
                expected: self.output_size(),
                got: grad_out.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(Error::Shape {
                expected: self.params.len(),
                got: grads.len(),
            });
        }
        let mut upstream = grad_out.to_vec();
        for l in (0..self.defs.len()).rev() {
            let s = self.defs[l];
            let delta: Vec<f64> = match s.activation {
                Activation::Relu => upstream
                    .iter()
                    .zip(&cache.pre_activations[l])
                    .map(|(g, &z)| if z > 0.0 { *g } else { 0.0 })
                    .collect(),
                Activation::Linear => upstream,
            };
            let x = &cache.inputs[l];
            let off = self.offsets[l];
            let n_w = s.input_size * s.output_size;
            {
                let (gw, gb) = grads[off..off + s.param_count()].split_at_mut(n_w);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * s.input_size..(o + 1) * s.input_size];
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 && !want_input_grad {
                return Ok(None);
            }
            let w = self.weights(l);
            let mut down = vec![0.0; s.input_size];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * s.input_size..(o + 1) * s.input_size];
                for (acc, &wi) in down.iter_mut().zip(row) {
                    *acc += d * wi;
                }
            }
            upstream = down;
        }
        Ok(Some(upstream))
    }
}
