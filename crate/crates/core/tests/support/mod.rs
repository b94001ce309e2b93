//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here reuses the code under test for the reference side.

#![allow(dead_code)]

use std::sync::Arc;
use std::time::Instant;

use cine_core::agent::{minibatch_step, AgentState, LaneWidths, QNetwork, Transition, UpdateConfig};
use cine_core::camera::{ray_occluded, FrameMetrics, ShotMode};
use cine_core::nn::{huber_loss, AdamState};
use cine_core::reward::{
    discount_step_reward, frame_reward, repetition_coefficient, score_step, stars_to_reward,
    total_step_reward, RewardConfig,
};
use cine_core::world::HeightMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One named comparison: `(name, got, want)`.
pub type Check = (String, f64, f64);

fn frame(tilt: f64, pr: f64) -> FrameMetrics {
    FrameMetrics {
        tilt,
        presence_ratio: pr,
        occluded: false,
        collided: false,
    }
}

/// Reward pipeline values against hand-derived expectations.
pub fn reward_checks() -> Vec<Check> {
    let cfg = RewardConfig::default();
    let (opt, tol) = (cfg.theta_opt, cfg.theta_tol);
    let pr = 0.1;
    let mut out: Vec<Check> = vec![
        ("angle at optimum".into(), frame_reward(&frame(opt, pr), &cfg), 1.0),
        ("angle at +tolerance".into(), frame_reward(&frame(opt + tol, pr), &cfg), 0.0),
        ("angle at -tolerance".into(), frame_reward(&frame(opt - tol, pr), &cfg), 0.0),
        ("angle halfway".into(), frame_reward(&frame(opt + tol / 2.0, pr), &cfg), 0.5),
        ("angle beyond".into(), frame_reward(&frame(opt + tol * 1.01, pr), &cfg), -0.5),
        ("angle far beyond".into(), frame_reward(&frame(opt - 1.0, pr), &cfg), -0.5),
        ("pr below bounds".into(), frame_reward(&frame(opt, 0.005), &cfg), -0.5),
        ("pr above bounds".into(), frame_reward(&frame(opt, 0.5), &cfg), -0.5),
        ("pr at lower bound".into(), frame_reward(&frame(opt, cfg.pr_min), &cfg), 1.0),
        ("pr at upper bound".into(), frame_reward(&frame(opt, cfg.pr_max), &cfg), 1.0),
        ("occluded frame".into(), frame_reward(&frame(opt, 0.0), &cfg), -0.5),
    ];
    for (c, want) in [(1, 0.5), (2, 1.0), (3, 2.0 / 9.0), (4, 0.125)] {
        out.push((format!("alpha_c({c})"), repetition_coefficient(c, 2).unwrap(), want));
    }
    out.extend([
        ("discount reward".into(), discount_step_reward(0.8, 0.5), 0.4),
        ("discount punishment".into(), discount_step_reward(-0.2, 0.5), -0.4),
        ("discount zero".into(), discount_step_reward(0.0, 0.125), 0.0),
        ("clamp low".into(), total_step_reward(discount_step_reward(-0.5, 0.125), false), -1.0),
        ("clamp passthrough".into(), total_step_reward(0.3, false), 0.3),
        ("collision override".into(), total_step_reward(0.9, true), -1.0),
    ]);
    let mut frames = vec![frame(opt, pr); 10];
    frames[3].collided = true;
    out.push(("collision in a step".into(), score_step(&frames, 2, &cfg).unwrap().r, -1.0));
    let mixed = [frame(opt, pr), frame(opt + tol / 2.0, pr), frame(opt, 0.9), frame(opt, pr)];
    // mean(1, 0.5, -0.5, 1) = 0.5, held 4 steps: 0.5 * 2/16.
    out.push(("full pipeline".into(), score_step(&mixed, 4, &cfg).unwrap().r, 0.0625));
    out.push(("full pipeline, punished".into(), score_step(&mixed[2..3], 1, &cfg).unwrap().r, -1.0));
    for (s, want) in [(0, -1.0), (1, -0.5), (2, -0.125), (3, 0.25), (4, 0.625), (5, 1.0)] {
        out.push((format!("{s} stars"), stars_to_reward(s).unwrap(), want));
    }
    out
}

fn ref_huber(e: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        0.5 * e * e
    } else {
        delta * (e.abs() - 0.5 * delta)
    }
}

pub fn random_state<R: Rng>(rng: &mut R) -> AgentState {
    let bytes: Vec<u8> = (0..576).map(|_| if rng.random_bool(0.6) { 0 } else { rng.random() }).collect();
    let mode = ShotMode::ALL[rng.random_range(0..4)];
    AgentState::from_parts(&bytes, mode, rng.random_range(1..=5) as f64 / 5.0)
}

#[derive(Debug, Clone, Copy)]
pub struct GradReport {
    pub max_rel_error: f64,
    pub coordinates: usize,
}

/// Backprop against central differences of the minibatch Huber loss on the
/// full-size network. Each draw re-initializes the parameters and checks
/// `per_lane` random coordinates in every lane.
pub fn gradient_check(draws: u64, per_lane: usize, h: f64) -> GradReport {
    let delta = 1.0;
    let mut max_rel: f64 = 0.0;
    let mut coordinates = 0;
    for draw in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9ad + draw);
        let mut net = QNetwork::new(LaneWidths::default(), &mut rng).unwrap();
        let batch: Vec<(AgentState, usize, f64)> = (0..8)
            .map(|_| {
                let s = random_state(&mut rng);
                let a = rng.random_range(0..4);
                let q = net.q_values(&s).unwrap()[a];
                (s, a, q + rng.random_range(-2.5..2.5))
            })
            .collect();
        let n = batch.len() as f64;

        let mut grads = net.zero_grads();
        for (s, a, y) in &batch {
            let cache = net.forward(s).unwrap();
            let (_, g) = huber_loss(cache.q()[*a], *y, delta);
            let mut gq = vec![0.0; 4];
            gq[*a] = g / n;
            net.backward_into(&cache, &gq, &mut grads).unwrap();
        }

        let loss = |net: &QNetwork| {
            batch
                .iter()
                .map(|(s, a, y)| ref_huber(net.q_values(s).unwrap()[*a] - y, delta))
                .sum::<f64>()
                / n
        };
        for lane in 0..4 {
            let count = net.lanes()[lane].param_count();
            for _ in 0..per_lane {
                let k = rng.random_range(0..count);
                let orig = net.lanes()[lane].params()[k];
                net.lanes_mut()[lane].params_mut()[k] = orig + h;
                let up = loss(&net);
                net.lanes_mut()[lane].params_mut()[k] = orig - h;
                let down = loss(&net);
                net.lanes_mut()[lane].params_mut()[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.0[lane][k];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
                coordinates += 1;
            }
        }
    }
    GradReport {
        max_rel_error: max_rel,
        coordinates,
    }
}

/// Two states (held left / held right), action 0 stays and action 1 moves
/// to the other state. Deterministic and never terminal.
pub struct TinyMdp {
    pub next: [[usize; 2]; 2],
    pub reward: [[f64; 2]; 2],
    pub gamma: f64,
}

impl Default for TinyMdp {
    fn default() -> Self {
        Self {
            next: [[0, 1], [1, 0]],
            reward: [[0.0, 0.2], [0.1, 0.0]],
            gamma: 0.9,
        }
    }
}

impl TinyMdp {
    pub fn value_iteration(&self) -> [[f64; 2]; 2] {
        let mut q = [[0.0f64; 2]; 2];
        for _ in 0..2000 {
            let mut next = q;
            for s in 0..2 {
                for a in 0..2 {
                    let s2 = self.next[s][a];
                    next[s][a] = self.reward[s][a] + self.gamma * q[s2][0].max(q[s2][1]);
                }
            }
            q = next;
        }
        q
    }
}

/// Trains a small two-action network on every transition of the MDP and
/// returns `(learned, optimal, max abs error)`.
pub fn q_learning_check(updates: usize, seed: u64) -> ([[f64; 2]; 2], [[f64; 2]; 2], f64) {
    let mdp = TinyMdp::default();
    let states = [
        Arc::new(AgentState::from_parts(&[0; 576], ShotMode::Left, 0.2)),
        Arc::new(AgentState::from_parts(&[0; 576], ShotMode::Right, 0.2)),
    ];
    let widths = LaneWidths {
        map: vec![4],
        shot: vec![8],
        count: vec![4],
        fusion: vec![16],
        actions: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = QNetwork::new(widths, &mut rng).unwrap();
    let mut adam = AdamState::new(net.param_count());
    let transitions: Vec<Transition> = (0..2)
        .flat_map(|s| (0..2).map(move |a| (s, a)))
        .map(|(s, a)| Transition {
            s: states[s].clone(),
            a,
            s_next: states[mdp.next[s][a]].clone(),
            r: mdp.reward[s][a],
            terminal: false,
        })
        .collect();
    let batch: Vec<&Transition> = transitions.iter().collect();
    let cfg = UpdateConfig {
        gamma: mdp.gamma,
        minibatch_size: 4,
        huber_delta: 1.0,
    };
    for _ in 0..updates {
        minibatch_step(&mut net, &mut adam, &batch, &cfg).unwrap();
    }
    let mut learned = [[0.0; 2]; 2];
    for s in 0..2 {
        let q = net.q_values(&states[s]).unwrap();
        learned[s] = [q[0], q[1]];
    }
    let optimal = mdp.value_iteration();
    let err = (0..4)
        .map(|i| (learned[i / 2][i % 2] - optimal[i / 2][i % 2]).abs())
        .fold(0.0, f64::max);
    (learned, optimal, err)
}

/// Samples the segment every `step` meters; blocked when any sample is
/// below the terrain.
pub fn fine_occluded(map: &HeightMap, from: [f64; 3], to: [f64; 3], step: f64) -> bool {
    let len = (to[0] - from[0]).hypot(to[1] - from[1]);
    let n = (len / step).ceil().max(1.0) as usize;
    (0..=n).any(|i| {
        let t = i as f64 / n as f64;
        let p = [0, 1, 2].map(|k| from[k] + (to[k] - from[k]) * t);
        map.height_at(p[0], p[1]) > p[2]
    })
}

/// Max (or min) over each cell's 3x3 neighborhood, shifted by one cell of
/// height.
fn morph(map: &HeightMap, grow: bool) -> HeightMap {
    let (w, h) = (map.width(), map.height());
    let shift = if grow { map.resolution() } else { -map.resolution() };
    let mut cells = vec![0.0; w * h];
    for iy in 0..h {
        for ix in 0..w {
            let mut v = map.get(ix, iy).unwrap();
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (x, y) = (ix as i64 + dx, iy as i64 + dy);
                    let n = if x < 0 || y < 0 {
                        None
                    } else {
                        map.get(x as usize, y as usize)
                    };
                    let n = n.unwrap_or(0.0);
                    v = if grow { v.max(n) } else { v.min(n) };
                }
            }
            cells[iy * w + ix] = (v + shift).clamp(0.0, map.max_obstacle_height() + map.resolution());
        }
    }
    HeightMap::from_cells(w, h, map.resolution(), map.max_obstacle_height() + map.resolution(), cells)
        .unwrap()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OcclusionReport {
    pub scenes: usize,
    pub agree: usize,
    pub blocked: usize,
    /// Disagreements that are not explained by a ray passing within one cell
    /// of an obstacle.
    pub unexplained: usize,
}

pub fn occlusion_check(scenes: usize, seed: u64) -> OcclusionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = OcclusionReport {
        scenes,
        ..Default::default()
    };
    for _ in 0..scenes {
        let mut map = HeightMap::flat(48, 48, 1.0, 20.0).unwrap();
        for _ in 0..rng.random_range(6..16) {
            let (x0, y0) = (rng.random_range(0..44), rng.random_range(0..44));
            let (bw, bh) = (rng.random_range(1..6), rng.random_range(1..6));
            let height = rng.random_range(0.5..20.0);
            for iy in y0..(y0 + bh).min(48) {
                for ix in x0..(x0 + bw).min(48) {
                    map.raise(ix, iy, height);
                }
            }
        }
        let mut point = |z: std::ops::Range<f64>| {
            [rng.random_range(1.0..47.0), rng.random_range(1.0..47.0), rng.random_range(z)]
        };
        let from = point(2.0..14.0);
        let to = point(0.5..3.0);
        let coarse = ray_occluded(&map, from, to);
        let fine = fine_occluded(&map, from, to, 0.05);
        rep.blocked += fine as usize;
        if coarse == fine {
            rep.agree += 1;
        } else {
            let near = fine_occluded(&morph(&map, true), from, to, 0.05)
                && !fine_occluded(&morph(&map, false), from, to, 0.05);
            rep.unexplained += !near as usize;
        }
    }
    rep
}

#[derive(Debug, Clone, Copy)]
pub struct Latency {
    pub median_ms: f64,
    pub p99_ms: f64,
}

/// Wall time of single forward passes of the default network on one thread.
pub fn forward_latency(runs: usize) -> Latency {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = QNetwork::new(LaneWidths::default(), &mut rng).unwrap();
    let s = random_state(&mut rng);
    for _ in 0..20 {
        std::hint::black_box(net.q_values(&s).unwrap());
    }
    let mut times: Vec<f64> = (0..runs)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(net.q_values(std::hint::black_box(&s)).unwrap());
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    Latency {
        median_ms: times[runs / 2],
        p99_ms: times[(runs * 99 / 100).min(runs - 1)],
    }
}
