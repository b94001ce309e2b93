//! What a human rater sees for one time step, and the hook through which
//! their rating reaches the training loop.

use serde::{Deserialize, Serialize};

use crate::agent::StepOutcome;
use crate::error::Result;
use crate::reward::stars_to_reward;
use crate::world::{crop_local_map, HeightMap, CROP_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneView {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// World-frame bearing from the actor to the drone, radians.
    pub azimuth: f64,
    /// World-frame camera yaw, radians.
    pub camera_yaw: f64,
    /// Downward camera tilt, radians.
    pub tilt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean_pr: f64,
    /// Mean tilt over the step's frames, degrees.
    pub mean_theta_deg: f64,
    pub occluded_fraction: f64,
    pub collided: bool,
}

/// Top-down scene of one finished time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub step_id: u64,
    pub episode: u32,
    pub step: u32,
    /// Heading-aligned height crop around the actor, row-major, row 0 ahead.
    pub local_map: Vec<u8>,
    pub local_map_size: usize,
    pub resolution: f64,
    pub actor: ActorPose,
    pub drone: DroneView,
    pub shot_mode: String,
    pub repetition_count: u32,
    /// Actor positions over the step.
    pub route_trail: Vec<[f64; 2]>,
    pub metrics: MetricSummary,
    /// Seconds left to rate, when a deadline is set.
    pub time_remaining_s: Option<f64>,
}

impl SceneSnapshot {
    pub fn from_outcome(step_id: u64, episode: u32, step: u32, outcome: &StepOutcome, map: &HeightMap) -> Self {
        let next = &outcome.next;
        let crop = crop_local_map(map, next.actor_position, next.actor_heading);
        let pose = outcome.poses[outcome.poses.len() - 1];
        let n = outcome.frames.len().max(1) as f64;
        let trail_stride = (outcome.samples.len() / 12).max(1);
        let mut route_trail: Vec<[f64; 2]> = outcome
            .samples
            .iter()
            .step_by(trail_stride)
            .map(|s| s.position)
            .collect();
        if route_trail.last() != Some(&next.actor_position) {
            route_trail.push(next.actor_position);
        }
        Self {
            step_id,
            episode,
            step,
            local_map: crop.bytes().to_vec(),
            local_map_size: CROP_SIZE,
            resolution: map.resolution(),
            actor: ActorPose {
                x: next.actor_position[0],
                y: next.actor_position[1],
                heading: next.actor_heading,
            },
            drone: DroneView {
                x: pose.position[0],
                y: pose.position[1],
                z: pose.position[2],
                azimuth: next.actor_heading + pose.azimuth_offset,
                camera_yaw: pose.yaw,
                tilt: pose.tilt,
            },
            shot_mode: next.shot_mode.name().to_string(),
            repetition_count: next.repetition_count,
            route_trail,
            metrics: MetricSummary {
                mean_pr: outcome.frames.iter().map(|m| m.presence_ratio).sum::<f64>() / n,
                mean_theta_deg: outcome.frames.iter().map(|m| m.tilt).sum::<f64>() / n * 180.0
                    / std::f64::consts::PI,
                occluded_fraction: outcome.occluded_frames() as f64 / n,
                collided: outcome.collided(),
            },
            time_remaining_s: None,
        }
    }
}

/// Supplies rewards from outside the simulator, one per time step. `rate`
/// blocks until the rating is in.
pub trait RatingSource {
    fn rate(&mut self, snapshot: SceneSnapshot) -> Result<f64>;

    /// Called after every episode with its mean delivered reward.
    fn episode_finished(&mut self, _episode: u32, _mean_reward: f64) {}
}

/// Rates every step with the same number of stars.
#[derive(Debug, Clone, Copy)]
pub struct FixedStars(pub u8);

impl RatingSource for FixedStars {
    fn rate(&mut self, _snapshot: SceneSnapshot) -> Result<f64> {
        stars_to_reward(self.0)
    }
}
