use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{
    frame_fractions, frame_metrics, transition_arc, viewpoint_for, ActorSample, CameraRig,
    DronePose, FrameMetrics, ShotMode,
};
use crate::error::{Error, Result};
use crate::reward::{score_step, RewardConfig, StepReward};
use crate::world::{advance_actor, ActorTrack, HeightMap, TrackMode, WorldState};

use super::DEFAULT_C_CAP;

/// Simulation settings shared by training and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub rig: CameraRig,
    pub reward: RewardConfig,
    pub step_seconds: f64,
    pub steps_per_episode: u32,
    pub c_cap: u32,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            rig: CameraRig::default(),
            reward: RewardConfig::default(),
            step_seconds: 6.0,
            steps_per_episode: 5,
            c_cap: DEFAULT_C_CAP,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.rig.validate()?;
        self.reward.validate()?;
        if !(self.step_seconds > 0.0) {
            return Err(Error::config("step_seconds must be positive"));
        }
        if self.steps_per_episode < 1 || self.c_cap < 1 {
            return Err(Error::config("steps_per_episode and c_cap must be at least 1"));
        }
        Ok(())
    }

    /// Route length an episode needs.
    pub fn episode_distance(&self, track: &ActorTrack) -> f64 {
        track.speed() * self.step_seconds * self.steps_per_episode as f64
    }
}

/// Everything produced by one simulated time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: WorldState,
    pub samples: Vec<ActorSample>,
    pub poses: Vec<DronePose>,
    pub frames: Vec<FrameMetrics>,
    pub reward: StepReward,
    /// 0, 90 or 180 degrees.
    pub switch_angle: u32,
}

impl StepOutcome {
    pub fn collided(&self) -> bool {
        self.reward.collided
    }

    pub fn occluded_frames(&self) -> usize {
        self.frames.iter().filter(|m| m.occluded).count()
    }
}

/// Episode start: back shot, held once, drone settled on its viewpoint.
pub fn start_state(track: &ActorTrack, offset: f64, rig: &CameraRig) -> WorldState {
    let mut state = WorldState::at_offset(track, offset, ShotMode::Back);
    state.drone_position =
        viewpoint_for(ShotMode::Back, state.actor_position, state.actor_heading, rig).position;
    state
}

/// Uniform start offset leaving room for a full episode on fixed routes.
pub fn random_offset<R: Rng + ?Sized>(track: &ActorTrack, cfg: &EnvConfig, rng: &mut R) -> f64 {
    match track.mode() {
        TrackMode::Roaming => 0.0,
        TrackMode::FixedRoute => {
            let room = track.length() - cfg.episode_distance(track);
            if room > 0.0 {
                rng.random_range(0.0..room)
            } else {
                0.0
            }
        }
    }
}

/// Simulates one time step with `action` as the new shot mode: the actor
/// walks, the drone transitions, every frame is measured and the step is
/// scored with the hand-crafted reward.
pub fn simulate_step<R: Rng + ?Sized>(
    map: &HeightMap,
    track: &ActorTrack,
    state: &WorldState,
    action: ShotMode,
    cfg: &EnvConfig,
    rng: &mut R,
) -> Result<StepOutcome> {
    let fractions = frame_fractions(cfg.reward.frames_per_step);
    let mut samples = Vec::with_capacity(fractions.len());
    let mut actor = state.clone();
    let mut t_prev = 0.0;
    for &t in &fractions {
        if t > t_prev {
            actor = advance_actor(track, map, &actor, (t - t_prev) * cfg.step_seconds, rng)?;
            t_prev = t;
        }
        samples.push(ActorSample {
            t,
            position: actor.actor_position,
            heading: actor.actor_heading,
        });
    }
    let poses = transition_arc(state.shot_mode, action, &samples, &cfg.rig)?;
    let frames: Vec<FrameMetrics> = poses
        .iter()
        .zip(&samples)
        .map(|(p, s)| frame_metrics(p.position, s.position, map, &cfg.rig))
        .collect();
    let c = if action == state.shot_mode {
        state.repetition_count + 1
    } else {
        1
    };
    let reward = score_step(&frames, c, &cfg.reward)?;

    let mut next = actor;
    next.drone_position = poses[poses.len() - 1].position;
    next.shot_mode = action;
    next.repetition_count = c;
    next.step_index = state.step_index + 1;
    Ok(StepOutcome {
        next,
        samples,
        poses,
        frames,
        reward,
        switch_angle: state.shot_mode.switch_angle(action),
    })
}
