use rand::seq::SliceRandom;
use rand::Rng;

use super::{greedy_action, AgentState, QNetwork, ReplayBuffer, Transition};
use crate::camera::ShotMode;
use crate::error::{Error, Result};
use crate::nn::{huber_loss, AdamState};

/// Hyperparameters of one pass over the replay buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateConfig {
    pub gamma: f64,
    pub minibatch_size: usize,
    pub huber_delta: f64,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            minibatch_size: 32,
            huber_delta: 1.0,
        }
    }
}

/// Bootstrapped target `r + gamma * max_a' Q(s', a')`, or `r` alone for a
/// terminal transition.
pub fn q_target(r: f64, gamma: f64, q_next: &[f64], terminal: bool) -> f64 {
    if terminal {
        r
    } else {
        r + gamma * q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Targets for a batch, computed with the network as it is now.
pub fn batch_targets(net: &QNetwork, batch: &[&Transition], gamma: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            let q_next = if t.terminal {
                Vec::new()
            } else {
                net.q_values(&t.s_next)?
            };
            Ok(q_target(t.r, gamma, &q_next, t.terminal))
        })
        .collect()
}

/// Shuffles the whole buffer, splits it into minibatches and takes one Adam
/// step per minibatch. Targets bootstrap from the network being trained (no
/// separate target network). Returns the mean Huber loss over all samples.
pub fn train_update<R: Rng + ?Sized>(
    net: &mut QNetwork,
    adam: &mut AdamState,
    buffer: &ReplayBuffer,
    cfg: &UpdateConfig,
    rng: &mut R,
) -> Result<f64> {
    if buffer.is_empty() {
        return Err(Error::invalid("replay buffer is empty"));
    }
    if cfg.minibatch_size == 0 {
        return Err(Error::config("minibatch size must be at least 1"));
    }
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    order.shuffle(rng);
    let mut total_loss = 0.0;
    for chunk in order.chunks(cfg.minibatch_size) {
        let batch: Vec<&Transition> = chunk.iter().map(|&i| buffer.get(i).unwrap()).collect();
        total_loss += minibatch_step(net, adam, &batch, cfg)? * batch.len() as f64;
    }
    Ok(total_loss / buffer.len() as f64)
}

/// One gradient step on a minibatch; returns its mean loss.
pub fn minibatch_step(
    net: &mut QNetwork,
    adam: &mut AdamState,
    batch: &[&Transition],
    cfg: &UpdateConfig,
) -> Result<f64> {
    let targets = batch_targets(net, batch, cfg.gamma)?;
    let n = batch.len() as f64;
    let mut grads = net.zero_grads();
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(&targets) {
        if t.a >= net.actions() {
            return Err(Error::invalid(format!("action {} out of range", t.a)));
        }
        let cache = net.forward(&t.s)?;
        let (l, g) = huber_loss(cache.q()[t.a], *y, cfg.huber_delta);
        loss += l;
        let mut grad_q = vec![0.0; net.actions()];
        grad_q[t.a] = g / n;
        net.backward_into(&cache, &grad_q, &mut grads)?;
    }
    net.apply_adam(adam, &grads)?;
    Ok(loss / n)
}

/// Epsilon-greedy choice over the network's actions.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    s: &AgentState,
    epsilon: f64,
    rng: &mut R,
) -> Result<ShotMode> {
    let a = if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..net.actions())
    } else {
        greedy_action(&net.q_values(s)?)
    };
    ShotMode::from_index(a).ok_or_else(|| Error::invalid("network has more than four actions"))
}
