//! Experiment orchestration: baseline policies, evaluation, comparison
//! tables, behavioral probes and run directories.

mod probes;
mod run_dir;
mod table;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{
    encode_state, greedy_action, random_offset, simulate_step, start_state, AgentState,
    Checkpoint, EnvConfig, StepOutcome,
};
use crate::camera::ShotMode;
use crate::error::{Error, Result};
use crate::reward::StepReward;
use crate::world::{ActorTrack, HeightMap, WorldBundle, WorldState};

pub use probes::{behavioral_probes, probe_scenes, ProbeReport, ProbeResult, ProbeScene};
pub use run_dir::{RunDir, LOG_DIR_ENV};
pub use table::{emit_table, parse_table_csv, Table};

/// Who picks the shot modes.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Greedy on a trained network.
    Trained(Box<Checkpoint>),
    Random,
    BackOnly,
    /// Cycles through the given modes, one per time step.
    FixedSequence(Vec<ShotMode>),
}

impl Policy {
    pub fn name(&self) -> String {
        match self {
            Policy::Trained(_) => "trained".into(),
            Policy::Random => "random".into(),
            Policy::BackOnly => "back".into(),
            Policy::FixedSequence(seq) => {
                let names: Vec<&str> = seq.iter().map(|m| m.name()).collect();
                format!("fixed[{}]", names.join(","))
            }
        }
    }

    /// Parses a baseline name: `random`, `back` or `fixed:left,back,...`.
    pub fn baseline(name: &str) -> Result<Self> {
        match name {
            "random" => Ok(Policy::Random),
            "back" | "back_only" => Ok(Policy::BackOnly),
            other => {
                let seq = other
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::invalid(format!("unknown baseline {other:?}")))?;
                let modes = seq
                    .split(',')
                    .map(|m| m.parse())
                    .collect::<Result<Vec<ShotMode>>>()?;
                if modes.is_empty() {
                    return Err(Error::invalid("fixed sequence is empty"));
                }
                Ok(Policy::FixedSequence(modes))
            }
        }
    }

    /// Refuses trained policies whose map encoding differs from the world.
    pub fn check_world(&self, map: &HeightMap, env: &EnvConfig) -> Result<()> {
        match self {
            Policy::Trained(ck) => ck.info.check_compatible(map, env),
            _ => Ok(()),
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, s: &AgentState, step: u32, rng: &mut R) -> Result<ShotMode> {
        Ok(match self {
            Policy::Trained(ck) => {
                let a = greedy_action(&ck.net.q_values(s)?);
                ShotMode::from_index(a).ok_or_else(|| Error::invalid("bad action index"))?
            }
            Policy::Random => ShotMode::ALL[rng.random_range(0..4)],
            Policy::BackOnly => ShotMode::Back,
            Policy::FixedSequence(seq) => seq[step as usize % seq.len()],
        })
    }
}

/// Runs one episode from `start`, stopping early on collision.
pub fn rollout<R: Rng + ?Sized>(
    policy: &Policy,
    map: &HeightMap,
    track: &ActorTrack,
    start: WorldState,
    env: &EnvConfig,
    rng: &mut R,
) -> Result<Vec<StepOutcome>> {
    let mut world = start;
    let mut out = Vec::with_capacity(env.steps_per_episode as usize);
    for step in 0..env.steps_per_episode {
        let s = encode_state(&world, map, env.c_cap);
        let action = policy.act(&s, step, rng)?;
        let outcome = simulate_step(map, track, &world, action, env, rng)?;
        world = outcome.next.clone();
        let stop = outcome.collided();
        out.push(outcome);
        if stop {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub episodes: u32,
    pub seed: u64,
    pub env: EnvConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 20,
            seed: 0,
            env: EnvConfig::default(),
        }
    }
}

/// Transitions by switch angle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchHistogram {
    pub deg0: u64,
    pub deg90: u64,
    pub deg180: u64,
}

impl SwitchHistogram {
    pub fn add(&mut self, angle: u32) {
        match angle {
            0 => self.deg0 += 1,
            90 => self.deg90 += 1,
            _ => self.deg180 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.deg0 + self.deg90 + self.deg180
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub world: String,
    pub route: String,
    pub episodes: u32,
    /// Mean reward per time step over all evaluated steps.
    pub mean_reward: f64,
    pub episode_means: Vec<f64>,
    pub breakdowns: Vec<StepReward>,
    pub collisions: u32,
    pub occluded_frame_fraction: f64,
    pub switch_histogram: SwitchHistogram,
    /// Times each mode was chosen, indexed like `ShotMode::index`.
    pub mode_counts: [u64; 4],
}

/// Greedy evaluation scored with the hand-crafted reward. Episodes start at
/// random offsets and run in parallel; episode `i` draws from its own RNG
/// stream, so results depend only on the seed.
pub fn evaluate(policy: &Policy, bundle: &WorldBundle, cfg: &EvalConfig) -> Result<EvalReport> {
    if cfg.episodes < 1 {
        return Err(Error::invalid("evaluation needs at least one episode"));
    }
    cfg.env.validate()?;
    policy.check_world(&bundle.map, &cfg.env)?;
    let episodes: Vec<Vec<StepOutcome>> = (0..cfg.episodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let offset = random_offset(&bundle.track, &cfg.env, &mut rng);
            let start = start_state(&bundle.track, offset, &cfg.env.rig);
            rollout(policy, &bundle.map, &bundle.track, start, &cfg.env, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut breakdowns = Vec::new();
    let mut episode_means = Vec::with_capacity(episodes.len());
    let mut collisions = 0;
    let (mut frames, mut occluded) = (0usize, 0usize);
    let mut switch_histogram = SwitchHistogram::default();
    let mut mode_counts = [0u64; 4];
    for ep in &episodes {
        let sum: f64 = ep.iter().map(|o| o.reward.r).sum();
        episode_means.push(sum / ep.len() as f64);
        for o in ep {
            breakdowns.push(o.reward);
            collisions += o.collided() as u32;
            frames += o.frames.len();
            occluded += o.occluded_frames();
            switch_histogram.add(o.switch_angle);
            mode_counts[o.next.shot_mode.index()] += 1;
        }
    }
    let mean_reward = breakdowns.iter().map(|b| b.r).sum::<f64>() / breakdowns.len() as f64;
    Ok(EvalReport {
        policy: policy.name(),
        world: bundle.world.clone(),
        route: bundle.route.clone(),
        episodes: cfg.episodes,
        mean_reward,
        episode_means,
        breakdowns,
        collisions,
        occluded_frame_fraction: occluded as f64 / frames.max(1) as f64,
        switch_histogram,
        mode_counts,
    })
}
