use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rollout, Policy, SwitchHistogram};
use crate::agent::{encode_state, random_offset, start_state, EnvConfig};
use crate::camera::{viewpoint_for, ShotMode};
use crate::error::Result;
use crate::world::{load_bundle, ActorTrack, HeightMap, WorldGenConfig, WorldState};

/// A constructed world plus the episode starts to roll out in it.
#[derive(Debug, Clone)]
pub struct ProbeScene {
    pub name: String,
    pub map: HeightMap,
    pub track: ActorTrack,
    /// Start states. Their shot modes are the ones the policy is held in.
    pub starts: Vec<WorldState>,
    /// Terrain without obstacles (shot-length probe).
    pub open: bool,
    /// Side blocked by a wall just ahead (vacate probe).
    pub walled_side: Option<ShotMode>,
}

const WALL_HEIGHT: f64 = 15.0;

fn held(track: &ActorTrack, offset: f64, mode: ShotMode, c: u32, env: &EnvConfig) -> WorldState {
    let mut s = start_state(track, offset, &env.rig);
    s.shot_mode = mode;
    s.repetition_count = c;
    s.drone_position = viewpoint_for(mode, s.actor_position, s.actor_heading, &env.rig).position;
    s
}

/// Open ground, a wall starting just ahead on the left, the same on the
/// right, and a generated block world route.
pub fn probe_scenes(env: &EnvConfig, gen: &WorldGenConfig) -> Result<Vec<ProbeScene>> {
    let (w, h) = (128, 64);
    let y = 32.5;
    let track = ActorTrack::straight([10.5, y], [117.5, y], gen.actor_speed)?;
    let offsets = [0.0, 12.0, 24.0, 36.0, 48.0, 60.0];
    let mut scenes = Vec::new();

    let open = HeightMap::flat(w, h, 1.0, gen.max_obstacle_height)?;
    scenes.push(ProbeScene {
        name: "open".into(),
        map: open.clone(),
        track: track.clone(),
        starts: offsets.iter().map(|&o| start_state(&track, o, &env.rig)).collect(),
        open: true,
        walled_side: None,
    });

    // One wall scene per start so the wall always begins 3 m ahead.
    for side in [ShotMode::Left, ShotMode::Right] {
        let rows: Vec<usize> = match side {
            ShotMode::Left => (35..40).collect(),
            _ => (25..30).collect(),
        };
        for (k, &o) in offsets.iter().take(4).enumerate() {
            let mut map = open.clone();
            let x_start = (10.5 + o + 3.0).floor() as usize;
            for ix in x_start..w {
                for &iy in &rows {
                    map.raise(ix, iy, WALL_HEIGHT);
                }
            }
            scenes.push(ProbeScene {
                name: format!("wall_{}_{k}", side.name()),
                map,
                track: track.clone(),
                starts: vec![
                    held(&track, o, side, 1, env),
                    held(&track, o, side, 2, env),
                ],
                open: false,
                walled_side: Some(side),
            });
        }
    }

    let block = load_bundle("blockworld", "test1", gen)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xb10c);
    let starts = (0..8)
        .map(|_| {
            let o = random_offset(&block.track, env, &mut rng);
            start_state(&block.track, o, &env.rig)
        })
        .collect();
    scenes.push(ProbeScene {
        name: "blockworld_test1".into(),
        map: block.map,
        track: block.track,
        starts,
        open: false,
        walled_side: None,
    });
    Ok(scenes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub results: Vec<ProbeResult>,
    pub switches: SwitchHistogram,
    /// Longest run of one shot mode in open terrain, in time steps.
    pub longest_open_hold: u32,
    pub vacate_trials: u32,
    pub vacated: u32,
    pub collisions: u32,
    pub episodes: u32,
}

impl ProbeReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

/// Rolls the policy out over `scenes` and checks four behaviors: 90° switches
/// outnumber 180° ones; in open terrain no mode is held longer than
/// `c_opt + 1` steps; with a wall ahead on the current side the first action
/// leaves that side; and no episode collides.
pub fn behavioral_probes(
    policy: &Policy,
    scenes: &[ProbeScene],
    env: &EnvConfig,
    seed: u64,
) -> Result<ProbeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut switches = SwitchHistogram::default();
    let mut longest_open_hold = 0;
    let (mut vacate_trials, mut vacated, mut collisions, mut episodes) = (0, 0, 0, 0);
    for scene in scenes {
        policy.check_world(&scene.map, env)?;
        for start in &scene.starts {
            if let Some(side) = scene.walled_side {
                let s = encode_state(start, &scene.map, env.c_cap);
                vacate_trials += 1;
                if policy.act(&s, 0, &mut rng)? != side {
                    vacated += 1;
                }
            }
            let steps = rollout(policy, &scene.map, &scene.track, start.clone(), env, &mut rng)?;
            episodes += 1;
            let mut run = 0;
            let mut prev = None;
            for o in &steps {
                switches.add(o.switch_angle);
                collisions += o.collided() as u32;
                run = if prev == Some(o.next.shot_mode) { run + 1 } else { 1 };
                prev = Some(o.next.shot_mode);
                if scene.open {
                    longest_open_hold = longest_open_hold.max(run);
                }
            }
        }
    }
    let limit = env.reward.c_opt + 1;
    let results = vec![
        ProbeResult {
            name: "prefers_90_over_180".into(),
            passed: switches.deg90 > switches.deg180,
            detail: format!("90°: {}, 180°: {}", switches.deg90, switches.deg180),
        },
        ProbeResult {
            name: "switches_regularly".into(),
            passed: longest_open_hold <= limit,
            detail: format!("longest hold {longest_open_hold} steps, limit {limit}"),
        },
        ProbeResult {
            name: "vacates_blocked_side".into(),
            passed: vacate_trials > 0 && vacated == vacate_trials,
            detail: format!("{vacated}/{vacate_trials} starts left the walled side"),
        },
        ProbeResult {
            name: "no_collisions".into(),
            passed: collisions == 0,
            detail: format!("{collisions} collisions in {episodes} episodes"),
        },
    ];
    Ok(ProbeReport {
        results,
        switches,
        longest_open_hold,
        vacate_trials,
        vacated,
        collisions,
        episodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (EnvConfig, Vec<ProbeScene>) {
        let env = EnvConfig {
            reward: crate::reward::RewardConfig {
                frames_per_step: 12,
                ..Default::default()
            },
            ..Default::default()
        };
        let scenes = probe_scenes(&env, &WorldGenConfig::default()).unwrap();
        (env, scenes)
    }

    #[test]
    fn back_only_never_switches() {
        let (env, scenes) = setup();
        let report = behavioral_probes(&Policy::BackOnly, &scenes, &env, 0).unwrap();
        assert!(!report.results[1].passed);
        // Only the wall starts, held on a side, move the drone to the back.
        assert_eq!(report.switches.deg90 as u32, report.vacate_trials);
        assert_eq!(report.switches.deg180, 0);
        assert_eq!(report.vacated, report.vacate_trials);
    }

    #[test]
    fn holding_the_walled_side_collides() {
        let (env, scenes) = setup();
        let hold_left = Policy::FixedSequence(vec![ShotMode::Left]);
        let report = behavioral_probes(&hold_left, &scenes, &env, 0).unwrap();
        assert!(!report.results[2].passed);
        assert!(!report.results[3].passed);
    }

    #[test]
    fn wall_start_is_collision_free() {
        let (env, scenes) = setup();
        for scene in scenes.iter().filter(|s| s.walled_side.is_some()) {
            for start in &scene.starts {
                let m = crate::camera::frame_metrics(
                    start.drone_position,
                    start.actor_position,
                    &scene.map,
                    &env.rig,
                );
                assert!(!m.collided, "{} starts inside the wall", scene.name);
            }
        }
    }
}
