use std::collections::VecDeque;

use rand::Rng;

use super::{dist, ActorTrack, HeightMap, TrackMode, WorldState};
use crate::error::{Error, Result};

/// Target draws attempted before a roaming actor gives up.
pub const MAX_ROAM_RETRIES: usize = 64;

/// Moves the actor forward by `dt` seconds.
///
/// Fixed routes advance `speed * dt` of arc length and take the heading of
/// the segment they are on; reaching the last waypoint raises
/// `route_finished`. Roaming actors walk 4-connected shortest paths over
/// free cells to uniformly drawn targets.
pub fn advance_actor<R: Rng + ?Sized>(
    track: &ActorTrack,
    map: &HeightMap,
    state: &WorldState,
    dt: f64,
    rng: &mut R,
) -> Result<WorldState> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let mut next = state.clone();
    match track.mode() {
        TrackMode::FixedRoute => {
            let total = track.length();
            if state.progress.route_finished || state.progress.distance >= total {
                next.progress.route_finished = true;
                return Ok(next);
            }
            let s = (state.progress.distance + track.speed() * dt).min(total);
            let (pos, heading) = track.point_at(s);
            next.actor_position = pos;
            next.actor_heading = heading;
            next.progress.distance = s;
            next.progress.route_finished = s >= total;
        }
        TrackMode::Roaming => {
            let mut remaining = track.speed() * dt;
            while remaining > 0.0 {
                if next.progress.roam_plan.is_empty() {
                    next.progress.roam_plan = draw_roam_plan(map, next.actor_position, rng)?;
                }
                let target = next.progress.roam_plan[0];
                let d = dist(next.actor_position, target);
                if d > 0.0 {
                    next.actor_heading = (target[1] - next.actor_position[1])
                        .atan2(target[0] - next.actor_position[0]);
                }
                if d <= remaining {
                    next.actor_position = target;
                    next.progress.roam_plan.remove(0);
                    next.progress.distance += d;
                    remaining -= d;
                } else {
                    let f = remaining / d;
                    next.actor_position = [
                        next.actor_position[0] + f * (target[0] - next.actor_position[0]),
                        next.actor_position[1] + f * (target[1] - next.actor_position[1]),
                    ];
                    next.progress.distance += remaining;
                    remaining = 0.0;
                }
            }
        }
    }
    Ok(next)
}

/// Draws a free target cell uniformly and returns the cell centers of a
/// shortest 4-connected free path to it, excluding the start cell.
fn draw_roam_plan<R: Rng + ?Sized>(
    map: &HeightMap,
    from: [f64; 2],
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    let (w, h) = (map.width(), map.height());
    let start = map
        .cell_at(from[0], from[1])
        .ok_or_else(|| Error::invalid("roaming actor is off the map"))?;
    let free: Vec<usize> = (0..w * h).filter(|&i| map.cells()[i] == 0.0).collect();
    if free.is_empty() {
        return Err(Error::Unreachable { retries: 0 });
    }

    // One BFS from the actor answers reachability for every candidate.
    let start_idx = start.1 * w + start.0;
    let mut parent = vec![usize::MAX; w * h];
    parent[start_idx] = start_idx;
    let mut queue = VecDeque::from([start_idx]);
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let neighbors = [
            (x + 1 < w).then(|| i + 1),
            (x > 0).then(|| i - 1),
            (y + 1 < h).then(|| i + w),
            (y > 0).then(|| i - w),
        ];
        for j in neighbors.into_iter().flatten() {
            if parent[j] == usize::MAX && map.cells()[j] == 0.0 {
                parent[j] = i;
                queue.push_back(j);
            }
        }
    }

    for _ in 0..MAX_ROAM_RETRIES {
        let target = free[rng.random_range(0..free.len())];
        if target == start_idx || parent[target] == usize::MAX {
            continue;
        }
        let mut path = Vec::new();
        let mut i = target;
        while i != start_idx {
            path.push(map.cell_center(i % w, i / w));
            i = parent[i];
        }
        path.reverse();
        return Ok(path);
    }
    Err(Error::Unreachable {
        retries: MAX_ROAM_RETRIES,
    })
}
