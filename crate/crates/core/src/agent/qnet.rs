use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentState;
use crate::error::{Error, Result};
use crate::nn::{chain, AdamState, ForwardCache, Mlp};
use crate::world::CROP_CELLS;

/// Layer widths of the three input lanes and the fusion head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaneWidths {
    /// Hidden widths of the map lane; the last entry is its output.
    pub map: Vec<usize>,
    pub shot: Vec<usize>,
    pub count: Vec<usize>,
    /// Hidden widths of the fusion head, before the action layer.
    pub fusion: Vec<usize>,
    pub actions: usize,
}

impl Default for LaneWidths {
    fn default() -> Self {
        Self {
            map: vec![256, 64],
            shot: vec![16],
            count: vec![8],
            fusion: vec![64],
            actions: 4,
        }
    }
}

impl LaneWidths {
    pub fn validate(&self) -> Result<()> {
        if self.map.is_empty() || self.shot.is_empty() || self.count.is_empty() {
            return Err(Error::config("every input lane needs at least one layer"));
        }
        if self.actions < 1 || self.actions > 4 {
            return Err(Error::config("action count must be within 1..=4"));
        }
        Ok(())
    }

    fn fused_width(&self) -> usize {
        self.map[self.map.len() - 1] + self.shot[self.shot.len() - 1] + self.count[self.count.len() - 1]
    }
}

fn sizes(input: usize, hidden: &[usize]) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).collect()
}

/// Three-lane Q-network: map, shot mode and repetition lanes are concatenated
/// and passed through a fusion head ending in one linear output per action.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub widths: LaneWidths,
    pub map_lane: Mlp,
    pub shot_lane: Mlp,
    pub count_lane: Mlp,
    pub fusion: Mlp,
}

/// Forward activations of all four sub-networks.
#[derive(Debug, Clone)]
pub struct QCache {
    map: ForwardCache,
    shot: ForwardCache,
    count: ForwardCache,
    fusion: ForwardCache,
}

impl QCache {
    pub fn q(&self) -> &[f64] {
        self.fusion.output()
    }

    /// Output of the shot lane, for inspection.
    pub fn shot_lane_output(&self) -> &[f64] {
        self.shot.output()
    }

    pub fn map_lane_output(&self) -> &[f64] {
        self.map.output()
    }

    pub fn count_lane_output(&self) -> &[f64] {
        self.count.output()
    }
}

/// Gradient buffers laid out like [`QNetwork::lanes`].
#[derive(Debug, Clone, PartialEq)]
pub struct QGrads(pub [Vec<f64>; 4]);

impl QNetwork {
    /// All-zero network.
    pub fn zeros(widths: LaneWidths) -> Result<Self> {
        widths.validate()?;
        let mut fusion_sizes = sizes(widths.fused_width(), &widths.fusion);
        fusion_sizes.push(widths.actions);
        Ok(Self {
            map_lane: Mlp::new(chain(&sizes(CROP_CELLS, &widths.map), false))?,
            shot_lane: Mlp::new(chain(&sizes(4, &widths.shot), false))?,
            count_lane: Mlp::new(chain(&sizes(1, &widths.count), false))?,
            fusion: Mlp::new(chain(&fusion_sizes, true))?,
            widths,
        })
    }

    pub fn new<R: Rng + ?Sized>(widths: LaneWidths, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        for lane in net.lanes_mut() {
            lane.init_glorot(rng);
        }
        Ok(net)
    }

    pub fn lanes(&self) -> [&Mlp; 4] {
        [&self.map_lane, &self.shot_lane, &self.count_lane, &self.fusion]
    }

    pub fn lanes_mut(&mut self) -> [&mut Mlp; 4] {
        [
            &mut self.map_lane,
            &mut self.shot_lane,
            &mut self.count_lane,
            &mut self.fusion,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.lanes().iter().map(|l| l.param_count()).sum()
    }

    pub fn actions(&self) -> usize {
        self.widths.actions
    }

    pub fn zero_grads(&self) -> QGrads {
        QGrads(self.lanes().map(|l| vec![0.0; l.param_count()]))
    }

    pub fn forward(&self, s: &AgentState) -> Result<QCache> {
        let map = self.map_lane.forward(&s.local_map)?;
        let shot = self.shot_lane.forward(&s.shot_onehot)?;
        let count = self.count_lane.forward(&[s.repetition_norm])?;
        let fused: Vec<f64> = map
            .output()
            .iter()
            .chain(shot.output())
            .chain(count.output())
            .copied()
            .collect();
        let fusion = self.fusion.forward(&fused)?;
        Ok(QCache {
            map,
            shot,
            count,
            fusion,
        })
    }

    pub fn q_values(&self, s: &AgentState) -> Result<Vec<f64>> {
        Ok(self.forward(s)?.fusion.output().to_vec())
    }

    /// Accumulates `dL/dparams` for `dL/dQ = grad_q` into `grads`.
    pub fn backward_into(&self, cache: &QCache, grad_q: &[f64], grads: &mut QGrads) -> Result<()> {
        let [g_map, g_shot, g_count, g_fusion] = &mut grads.0;
        let fused_grad = self
            .fusion
            .backward_into(&cache.fusion, grad_q, g_fusion, true)?
            .ok_or(Error::MissingCache)?;
        let (m, rest) = fused_grad.split_at(self.map_lane.output_size());
        let (s, c) = rest.split_at(self.shot_lane.output_size());
        self.map_lane.backward_into(&cache.map, m, g_map, false)?;
        self.shot_lane.backward_into(&cache.shot, s, g_shot, false)?;
        self.count_lane.backward_into(&cache.count, c, g_count, false)?;
        Ok(())
    }

    /// One Adam step with gradients from [`QNetwork::backward_into`].
    pub fn apply_adam(&mut self, adam: &mut AdamState, grads: &QGrads) -> Result<()> {
        let [a, b, c, d] = self.lanes_mut();
        adam.step_segments(&mut [
            (a.params_mut(), &grads.0[0]),
            (b.params_mut(), &grads.0[1]),
            (c.params_mut(), &grads.0[2]),
            (d.params_mut(), &grads.0[3]),
        ])
    }
}

/// Greedy action: argmax with ties going to the lowest index.
pub fn greedy_action(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}
