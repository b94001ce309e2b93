//! Hand-crafted shot reward and the star-rating mapping used when a human
//! supplies the reward.
//!
//! Per frame, the shot-angle term decays linearly from 1 at the optimal tilt
//! to 0 at the tolerance border and drops to the artistic punishment beyond
//! it; the presence-ratio term passes that value through when the actor's
//! image share lies within bounds and punishes otherwise. Frame rewards are
//! averaged over the step, discounted by how long the shot mode has been
//! held, and overridden by the collision punishment.

use serde::{Deserialize, Serialize};

use crate::camera::FrameMetrics;
use crate::error::{Error, Result};

/// Reward knobs. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub theta_opt: f64,
    pub theta_tol: f64,
    pub pr_min: f64,
    pub pr_max: f64,
    /// Ideal number of consecutive steps for one shot mode.
    pub c_opt: u32,
    pub artistic_punishment: f64,
    pub collision_punishment: f64,
    /// Frames scored per time step.
    pub frames_per_step: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            // Tilt of the default rig in steady state: atan(2 / 5) ~ 21.8 deg.
            theta_opt: 0.4f64.atan(),
            theta_tol: 15f64.to_radians(),
            pr_min: 0.01,
            pr_max: 0.30,
            c_opt: 2,
            artistic_punishment: -0.5,
            collision_punishment: -1.0,
            frames_per_step: 60,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_tol > 0.0) {
            return Err(Error::config("theta_tol must be positive"));
        }
        if !(0.0 < self.pr_min && self.pr_min < self.pr_max && self.pr_max <= 1.0) {
            return Err(Error::config("need 0 < pr_min < pr_max <= 1"));
        }
        if self.c_opt < 1 {
            return Err(Error::config("c_opt must be at least 1"));
        }
        if self.frames_per_step < 1 {
            return Err(Error::config("frames_per_step must be at least 1"));
        }
        Ok(())
    }
}

/// Reward of a single frame: shot angle, then gated by presence ratio.
pub fn frame_reward(m: &FrameMetrics, cfg: &RewardConfig) -> f64 {
    let deviation = (m.tilt - cfg.theta_opt).abs();
    let shot_angle = if deviation <= cfg.theta_tol {
        1.0 - deviation / cfg.theta_tol
    } else {
        cfg.artistic_punishment
    };
    if (cfg.pr_min..=cfg.pr_max).contains(&m.presence_ratio) {
        shot_angle
    } else {
        cfg.artistic_punishment
    }
}

/// Arithmetic mean of a step's frame rewards.
pub fn average_step_reward(frames: &[f64]) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::invalid("cannot average an empty frame list"));
    }
    Ok(frames.iter().sum::<f64>() / frames.len() as f64)
}

/// Shot-length coefficient: rises linearly to 1 at `c_opt`, then decays as
/// `c_opt / c^2`.
pub fn repetition_coefficient(c: u32, c_opt: u32) -> Result<f64> {
    if c < 1 {
        return Err(Error::invalid("repetition count starts at 1"));
    }
    let (c, c_opt) = (c as f64, c_opt as f64);
    Ok(if c <= c_opt { c / c_opt } else { c_opt / (c * c) })
}

/// Scales rewards down and punishments up when the coefficient is below 1.
pub fn discount_step_reward(r_avg: f64, alpha_c: f64) -> f64 {
    if r_avg >= 0.0 {
        r_avg * alpha_c
    } else {
        r_avg / alpha_c
    }
}

/// Collision override, otherwise the discounted reward clamped to `[-1, 1]`.
pub fn total_step_reward(r_discounted: f64, collided: bool) -> f64 {
    if collided {
        -1.0
    } else {
        r_discounted.clamp(-1.0, 1.0)
    }
}

/// Per-step reward breakdown, as logged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReward {
    pub r_avg: f64,
    pub alpha_c: f64,
    pub r_discounted: f64,
    pub r: f64,
    pub collided: bool,
}

/// Full hand-crafted pipeline for one time step held at repetition count
/// `c`.
pub fn score_step(frames: &[FrameMetrics], c: u32, cfg: &RewardConfig) -> Result<StepReward> {
    let rewards: Vec<f64> = frames.iter().map(|m| frame_reward(m, cfg)).collect();
    let r_avg = average_step_reward(&rewards)?;
    let alpha_c = repetition_coefficient(c, cfg.c_opt)?;
    let r_discounted = discount_step_reward(r_avg, alpha_c);
    let collided = frames.iter().any(|m| m.collided);
    let r = if collided {
        cfg.collision_punishment
    } else {
        total_step_reward(r_discounted, false)
    };
    Ok(StepReward {
        r_avg,
        alpha_c,
        r_discounted,
        r,
        collided,
    })
}

/// Maps a 0-5 star rating to a reward: 0 stars is a collision (-1), 1..5
/// stars spread linearly over [-0.5, 1].
pub fn stars_to_reward(stars: u8) -> Result<f64> {
    match stars {
        0 => Ok(-1.0),
        1..=5 => Ok(-0.5 + 0.375 * (stars as f64 - 1.0)),
        _ => Err(Error::invalid(format!("stars must be 0..=5, got {stars}"))),
    }
}
