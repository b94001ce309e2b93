use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    encode_state, random_offset, select_action, simulate_step, start_state, train_update,
    Checkpoint, CheckpointInfo, EnvConfig, LaneWidths, QNetwork, ReplayBuffer, Transition,
    UpdateConfig,
};
use crate::error::{Error, Result};
use crate::nn::AdamState;
use crate::reward::StepReward;
use crate::scene::{RatingSource, SceneSnapshot};
use crate::world::WorldBundle;

/// Linear decay from `start` to `end` over the first `anneal_fraction` of
/// the run, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.1,
            anneal_fraction: 0.6,
        }
    }
}

impl EpsilonSchedule {
    pub fn anneal_episodes(&self, total: u32) -> u32 {
        (total as f64 * self.anneal_fraction).ceil() as u32
    }

    pub fn value(&self, episode: u32, total: u32) -> f64 {
        let n = self.anneal_episodes(total);
        if n == 0 {
            return self.end;
        }
        let f = (episode as f64 / n as f64).min(1.0);
        self.start * (1.0 - f) + self.end * f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: u32,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub minibatch_size: usize,
    /// Episodes between passes over the replay buffer.
    pub update_period: u32,
    pub replay_capacity: usize,
    pub learning_rate: f64,
    pub huber_delta: f64,
    pub lanes: LaneWidths,
    pub seed: u64,
    pub env: EnvConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 300,
            gamma: 0.9,
            epsilon: EpsilonSchedule::default(),
            minibatch_size: 32,
            update_period: 10,
            replay_capacity: 10_000,
            learning_rate: 1e-3,
            huber_delta: 1.0,
            lanes: LaneWidths::default(),
            seed: 0,
            env: EnvConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.lanes.validate()?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma must lie in (0, 1)"));
        }
        if self.minibatch_size < 1 || self.update_period < 1 || self.replay_capacity < 1 {
            return Err(Error::config(
                "minibatch_size, update_period and replay_capacity must be at least 1",
            ));
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) || e.end > e.start {
            return Err(Error::config("epsilon must decay within [0, 1]"));
        }
        if !(0.0..=1.0).contains(&e.anneal_fraction) {
            return Err(Error::config("anneal_fraction must lie in [0, 1]"));
        }
        if !(self.learning_rate > 0.0 && self.huber_delta > 0.0) {
            return Err(Error::config("learning_rate and huber_delta must be positive"));
        }
        Ok(())
    }

    pub fn update_config(&self) -> UpdateConfig {
        UpdateConfig {
            gamma: self.gamma,
            minibatch_size: self.minibatch_size,
            huber_delta: self.huber_delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Handcrafted,
    Human,
}

impl RewardMode {
    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Handcrafted => "handcrafted",
            RewardMode::Human => "human",
        }
    }
}

impl std::str::FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "handcrafted" => Ok(RewardMode::Handcrafted),
            "human" => Ok(RewardMode::Human),
            other => Err(Error::invalid(format!("unknown reward mode {other:?}"))),
        }
    }
}

/// One line of the episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub episode: u32,
    pub step: u32,
    pub step_id: u64,
    pub state_hash: String,
    pub action: String,
    pub action_index: usize,
    pub switch_angle: u32,
    /// Hand-crafted breakdown, computed in both reward modes.
    pub breakdown: StepReward,
    /// Reward stored in the replay buffer.
    pub reward: f64,
    pub reward_source: String,
    pub epsilon: f64,
    pub terminal: bool,
    /// Mean loss of the buffer pass run after this step, if any.
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: u32,
    pub steps: u32,
    pub mean_reward: f64,
    pub collided: bool,
    pub epsilon: f64,
    pub loss: Option<f64>,
}

/// Mean episode reward over consecutive groups of `bucket` episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub bucket: u32,
    pub first_episode: u32,
    pub last_episode: u32,
    pub mean_reward: f64,
}

pub const CURVE_BUCKET: usize = 30;

pub fn reward_curve(mean_rewards: &[f64], bucket: usize) -> Vec<CurvePoint> {
    mean_rewards
        .chunks(bucket.max(1))
        .enumerate()
        .map(|(i, chunk)| CurvePoint {
            bucket: i as u32,
            first_episode: (i * bucket) as u32,
            last_episode: (i * bucket + chunk.len() - 1) as u32,
            mean_reward: chunk.iter().sum::<f64>() / chunk.len() as f64,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub episodes: Vec<EpisodeSummary>,
}

impl TrainOutcome {
    pub fn curve(&self) -> Vec<CurvePoint> {
        let means: Vec<f64> = self.episodes.iter().map(|e| e.mean_reward).collect();
        reward_curve(&means, CURVE_BUCKET)
    }
}

/// DQN training loop. Each episode starts at a random route offset in the
/// back shot and runs up to `steps_per_episode` time steps; a collision ends
/// it early and is stored without bootstrap. After every `update_period`
/// episodes the whole buffer is replayed once. In human mode `rater`
/// supplies every step's reward.
pub fn run_training(
    bundle: &WorldBundle,
    cfg: &TrainConfig,
    mode: RewardMode,
    mut rater: Option<&mut dyn RatingSource>,
    mut on_step: Option<&mut dyn FnMut(&StepLog) -> Result<()>>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if mode == RewardMode::Human && rater.is_none() {
        return Err(Error::config("human reward mode needs a rating channel"));
    }
    let (map, track) = (&bundle.map, &bundle.track);
    track.validate_on(map)?;
    let env = &cfg.env;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = QNetwork::new(cfg.lanes.clone(), &mut rng)?;
    let mut adam = AdamState::with_lr(net.param_count(), cfg.learning_rate);
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    let update_cfg = cfg.update_config();
    let mut summaries = Vec::with_capacity(cfg.episodes as usize);
    let mut step_id = 0u64;

    for episode in 0..cfg.episodes {
        let epsilon = cfg.epsilon.value(episode, cfg.episodes);
        let offset = random_offset(track, env, &mut rng);
        let mut world = start_state(track, offset, &env.rig);
        let mut s = Arc::new(encode_state(&world, map, env.c_cap));
        let mut logs = Vec::new();
        let mut total = 0.0;
        let mut collided = false;
        for step in 0..env.steps_per_episode {
            let action = select_action(&net, &s, epsilon, &mut rng)?;
            let outcome = simulate_step(map, track, &world, action, env, &mut rng)?;
            step_id += 1;
            let r = match (mode, rater.as_deref_mut()) {
                (RewardMode::Human, Some(rater)) => {
                    let snap = SceneSnapshot::from_outcome(step_id, episode, step, &outcome, map);
                    let r = rater.rate(snap)?;
                    if !(-1.0..=1.0).contains(&r) {
                        return Err(Error::Rating(format!("reward {r} outside [-1, 1]")));
                    }
                    r
                }
                _ => outcome.reward.r,
            };
            let terminal = outcome.collided();
            let s_next = Arc::new(encode_state(&outcome.next, map, env.c_cap));
            buffer.push(Transition {
                s: s.clone(),
                a: action.index(),
                s_next: s_next.clone(),
                r,
                terminal,
            });
            logs.push(StepLog {
                episode,
                step,
                step_id,
                state_hash: s.digest(),
                action: action.name().to_string(),
                action_index: action.index(),
                switch_angle: outcome.switch_angle,
                breakdown: outcome.reward,
                reward: r,
                reward_source: mode.name().to_string(),
                epsilon,
                terminal,
                loss: None,
            });
            total += r;
            world = outcome.next;
            s = s_next;
            if terminal {
                collided = true;
                break;
            }
        }

        let loss = if (episode + 1) % cfg.update_period == 0 {
            Some(train_update(&mut net, &mut adam, &buffer, &update_cfg, &mut rng)?)
        } else {
            None
        };
        if let Some(last) = logs.last_mut() {
            last.loss = loss;
        }
        if let Some(f) = on_step.as_deref_mut() {
            for log in &logs {
                f(log)?;
            }
        }
        let mean_reward = total / logs.len() as f64;
        if let Some(rater) = rater.as_deref_mut() {
            rater.episode_finished(episode, mean_reward);
        }
        summaries.push(EpisodeSummary {
            episode,
            steps: logs.len() as u32,
            mean_reward,
            collided,
            epsilon,
            loss,
        });
    }

    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            info: CheckpointInfo {
                world: bundle.world.clone(),
                route: bundle.route.clone(),
                resolution: map.resolution(),
                max_obstacle_height: map.max_obstacle_height(),
                c_cap: env.c_cap,
                episodes_trained: cfg.episodes,
                reward_mode: mode.name().to_string(),
            },
            net,
            adam,
            rng,
        },
        episodes: summaries,
    })
}
