//! DQN shot-mode agent: state encoding, the three-lane Q-network, replay,
//! the update rule and the training loop.

mod checkpoint;
mod env;
mod qnet;
mod replay;
mod state;
mod train;
mod update;

pub use checkpoint::{Checkpoint, CheckpointInfo};
pub use env::{random_offset, simulate_step, start_state, EnvConfig, StepOutcome};
pub use qnet::{greedy_action, LaneWidths, QCache, QGrads, QNetwork};
pub use replay::{ReplayBuffer, Transition};
pub use state::{encode_state, AgentState, DEFAULT_C_CAP};
pub use train::{
    reward_curve, run_training, CurvePoint, EpisodeSummary, EpsilonSchedule, RewardMode, StepLog,
    TrainConfig, TrainOutcome, CURVE_BUCKET,
};
pub use update::{
    batch_targets, minibatch_step, q_target, select_action, train_update, UpdateConfig,
};
