use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use cine_core::agent::{reward_curve, CurvePoint, CURVE_BUCKET};
use cine_core::reward::stars_to_reward;
use cine_core::scene::{RatingSource, SceneSnapshot};
use cine_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Body of `POST /api/rating`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSubmission {
    pub step_id: u64,
    pub stars: i64,
    #[serde(default)]
    pub rater_id: String,
}

/// Accepted rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingAck {
    pub step_id: u64,
    pub stars: u8,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum Rejection {
    /// The step is not (or no longer) open.
    StaleStep { current_step_id: Option<u64> },
    InvalidStars { stars: i64 },
}

/// Append-only record of one accepted rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub step_id: u64,
    pub stars: u8,
    pub reward: f64,
    pub rater_id: String,
    /// Time from publication to rating.
    pub latency_ms: u64,
    pub received_unix_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Open,
    Idle,
    Finished,
}

/// Body of `GET /api/step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepView {
    pub status: StepStatus,
    pub step: Option<SceneSnapshot>,
    pub last_step_id: u64,
}

/// Body of `GET /api/progress`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub episodes_completed: u32,
    pub episode_rewards: Vec<f64>,
    pub curve: Vec<CurvePoint>,
    pub bucket_size: usize,
    pub ratings_received: usize,
    pub open_step_id: Option<u64>,
    pub paused: bool,
    pub finished: bool,
}

struct OpenStep {
    snapshot: SceneSnapshot,
    opened: Instant,
}

#[derive(Default)]
struct State {
    open: Option<OpenStep>,
    last_step_id: u64,
    /// Rating accepted but not yet collected by the training loop.
    delivered: Option<(u64, f64)>,
    log: Vec<RatingRecord>,
    episode_rewards: Vec<f64>,
    paused: bool,
    finished: bool,
}

/// Single-step rendezvous between the training loop and rating clients.
/// The loop publishes a snapshot and blocks; the first valid rating for that
/// step releases it.
pub struct RatingDesk {
    state: Mutex<State>,
    changed: Condvar,
    timeout: Option<Duration>,
    log_file: Option<Mutex<BufWriter<File>>>,
}

impl RatingDesk {
    /// `timeout`: how long to wait before flagging the run as paused.
    pub fn new(timeout: Option<Duration>) -> Self {
        Self {
            state: Mutex::new(State::default()),
            changed: Condvar::new(),
            timeout,
            log_file: None,
        }
    }

    /// Also appends every accepted rating as a JSON line to `file`.
    pub fn with_log_file(mut self, file: File) -> Self {
        self.log_file = Some(Mutex::new(BufWriter::new(file)));
        self
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn view(&self, st: &State) -> StepView {
        let step = st.open.as_ref().map(|o| {
            let mut snap = o.snapshot.clone();
            snap.time_remaining_s = self
                .timeout
                .map(|t| t.saturating_sub(o.opened.elapsed()).as_secs_f64());
            snap
        });
        let status = if step.is_some() {
            StepStatus::Open
        } else if st.finished {
            StepStatus::Finished
        } else {
            StepStatus::Idle
        };
        StepView {
            status,
            step,
            last_step_id: st.last_step_id,
        }
    }

    /// Opens a rating window. Fails while another step is open or when the
    /// step id does not increase.
    pub fn publish_step(&self, snapshot: SceneSnapshot) -> Result<()> {
        let mut st = self.lock();
        if let Some(open) = &st.open {
            return Err(Error::Rating(format!(
                "step {} is still open",
                open.snapshot.step_id
            )));
        }
        if st.finished {
            return Err(Error::Rating("run already finished".into()));
        }
        if snapshot.step_id <= st.last_step_id {
            return Err(Error::Rating(format!(
                "step id {} does not follow {}",
                snapshot.step_id, st.last_step_id
            )));
        }
        st.last_step_id = snapshot.step_id;
        st.open = Some(OpenStep {
            snapshot,
            opened: Instant::now(),
        });
        st.delivered = None;
        drop(st);
        self.changed.notify_all();
        Ok(())
    }

    pub fn current_step(&self) -> StepView {
        let st = self.lock();
        self.view(&st)
    }

    /// Long poll: returns once a step newer than `after` is open, the run
    /// has finished, or `wait` has passed.
    pub fn wait_for_step(&self, after: u64, wait: Duration) -> StepView {
        let deadline = Instant::now() + wait;
        let mut st = self.lock();
        loop {
            let ready = st.finished || st.open.as_ref().is_some_and(|o| o.snapshot.step_id > after);
            let now = Instant::now();
            if ready || now >= deadline {
                return self.view(&st);
            }
            st = self
                .changed
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    /// First valid rating for the open step wins; anything else is rejected
    /// with the currently open step id.
    pub fn submit_rating(&self, sub: &RatingSubmission) -> std::result::Result<RatingAck, Rejection> {
        let stars = u8::try_from(sub.stars)
            .ok()
            .filter(|s| *s <= 5)
            .ok_or(Rejection::InvalidStars { stars: sub.stars })?;
        let mut st = self.lock();
        let current = st.open.as_ref().map(|o| o.snapshot.step_id);
        if current != Some(sub.step_id) {
            return Err(Rejection::StaleStep {
                current_step_id: current,
            });
        }
        let open = st.open.take().expect("checked above");
        let reward = stars_to_reward(stars).expect("stars validated");
        let record = RatingRecord {
            step_id: sub.step_id,
            stars,
            reward,
            rater_id: sub.rater_id.clone(),
            latency_ms: open.opened.elapsed().as_millis() as u64,
            received_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        };
        if let Some(f) = &self.log_file {
            let mut f = f.lock().unwrap_or_else(|e| e.into_inner());
            let _ = serde_json::to_writer(&mut *f, &record);
            let _ = f.write_all(b"\n");
            let _ = f.flush();
        }
        st.log.push(record);
        st.delivered = Some((sub.step_id, reward));
        st.paused = false;
        drop(st);
        self.changed.notify_all();
        Ok(RatingAck {
            step_id: sub.step_id,
            stars,
            reward,
        })
    }

    /// Blocks until `step_id` is rated. Past the timeout the run is flagged
    /// as paused and keeps waiting; no reward is ever made up.
    pub fn await_rating(&self, step_id: u64) -> Result<f64> {
        let started = Instant::now();
        let mut st = self.lock();
        loop {
            if let Some((id, r)) = st.delivered {
                if id == step_id {
                    st.delivered = None;
                    return Ok(r);
                }
            }
            if st.open.as_ref().map(|o| o.snapshot.step_id) != Some(step_id) {
                return Err(Error::Rating(format!("step {step_id} is not open")));
            }
            st = match self.timeout {
                Some(t) if !st.paused => {
                    let left = t.saturating_sub(started.elapsed());
                    if left.is_zero() {
                        st.paused = true;
                        eprintln!("rating for step {step_id} overdue; training paused");
                        self.changed.notify_all();
                        continue;
                    }
                    self.changed
                        .wait_timeout(st, left)
                        .unwrap_or_else(|e| e.into_inner())
                        .0
                }
                _ => self.changed.wait(st).unwrap_or_else(|e| e.into_inner()),
            };
        }
    }

    pub fn record_episode(&self, mean_reward: f64) {
        self.lock().episode_rewards.push(mean_reward);
        self.changed.notify_all();
    }

    /// Marks the run as over and wakes long polls.
    pub fn finish(&self) {
        self.lock().finished = true;
        self.changed.notify_all();
    }

    pub fn progress(&self) -> Progress {
        let st = self.lock();
        Progress {
            episodes_completed: st.episode_rewards.len() as u32,
            episode_rewards: st.episode_rewards.clone(),
            curve: reward_curve(&st.episode_rewards, CURVE_BUCKET),
            bucket_size: CURVE_BUCKET,
            ratings_received: st.log.len(),
            open_step_id: st.open.as_ref().map(|o| o.snapshot.step_id),
            paused: st.paused,
            finished: st.finished,
        }
    }

    pub fn rating_log(&self) -> Vec<RatingRecord> {
        self.lock().log.clone()
    }
}

/// Training-side handle: publishes each step and blocks for its rating.
pub struct HumanRater {
    desk: std::sync::Arc<RatingDesk>,
}

impl HumanRater {
    pub fn new(desk: std::sync::Arc<RatingDesk>) -> Self {
        Self { desk }
    }
}

impl RatingSource for HumanRater {
    fn rate(&mut self, snapshot: SceneSnapshot) -> Result<f64> {
        let id = snapshot.step_id;
        self.desk.publish_step(snapshot)?;
        self.desk.await_rating(id)
    }

    fn episode_finished(&mut self, _episode: u32, mean_reward: f64) {
        self.desk.record_episode(mean_reward);
    }
}
