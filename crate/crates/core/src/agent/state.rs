use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::ShotMode;
use crate::world::{crop_local_map, HeightMap, WorldState, CROP_CELLS};

/// Default saturation point of the repetition input.
pub const DEFAULT_C_CAP: u32 = 5;

/// Network input: local height map, current shot mode and how long it has
/// been held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    /// 576 values in `[0, 1]`.
    pub local_map: Vec<f64>,
    pub shot_onehot: [f64; 4],
    pub repetition_norm: f64,
}

impl AgentState {
    /// Assembles a state from raw parts; map bytes are scaled by 1/255.
    pub fn from_parts(map_bytes: &[u8], mode: ShotMode, repetition_norm: f64) -> Self {
        let mut shot_onehot = [0.0; 4];
        shot_onehot[mode.index()] = 1.0;
        Self {
            local_map: map_bytes.iter().map(|&b| b as f64 / 255.0).collect(),
            shot_onehot,
            repetition_norm,
        }
    }

    pub fn shot_mode(&self) -> Option<ShotMode> {
        self.shot_onehot
            .iter()
            .position(|&v| v == 1.0)
            .and_then(ShotMode::from_index)
    }

    /// Short hex digest of the exact input values, for logs.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in self
            .local_map
            .iter()
            .chain(&self.shot_onehot)
            .chain(std::iter::once(&self.repetition_norm))
        {
            h.update(v.to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Encodes the world as seen by the agent. The repetition count saturates at
/// `c_cap`.
pub fn encode_state(world: &WorldState, map: &HeightMap, c_cap: u32) -> AgentState {
    let crop = crop_local_map(map, world.actor_position, world.actor_heading);
    debug_assert_eq!(crop.bytes().len(), CROP_CELLS);
    let c_cap = c_cap.max(1);
    let norm = world.repetition_count.min(c_cap) as f64 / c_cap as f64;
    AgentState::from_parts(crop.bytes(), world.shot_mode, norm)
}
