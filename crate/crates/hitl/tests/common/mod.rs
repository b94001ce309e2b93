#![allow(dead_code)]

use cine_core::agent::{simulate_step, start_state, EnvConfig};
use cine_core::camera::ShotMode;
use cine_core::scene::SceneSnapshot;
use cine_core::world::{ActorTrack, HeightMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn snapshot(step_id: u64) -> SceneSnapshot {
    let map = HeightMap::flat(64, 64, 1.0, 20.0).unwrap();
    let track = ActorTrack::straight([10.5, 32.5], [60.5, 32.5], 1.5).unwrap();
    let env = EnvConfig::default();
    let s0 = start_state(&track, 0.0, &env.rig);
    let mut rng = ChaCha8Rng::seed_from_u64(step_id);
    let out = simulate_step(&map, &track, &s0, ShotMode::Left, &env, &mut rng).unwrap();
    SceneSnapshot::from_outcome(step_id, 0, 0, &out, &map)
}
