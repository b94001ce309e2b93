//! Kinematic drone-camera model.
//!
//! The drone orbits the actor at a fixed radius and altitude; a shot mode
//! picks the azimuth relative to the actor's heading. Each frame is scored
//! geometrically: tilt of the camera-to-actor ray, presence ratio of the
//! actor's projected bounding box under a pinhole camera, a cell-stepping
//! occlusion test against the height map, and a collision test of the
//! drone's own cell.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::HeightMap;

/// The agent's action: where the drone films from, relative to the actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotMode {
    Left,
    Right,
    Front,
    Back,
}

impl ShotMode {
    /// Index order used by one-hot encodings and Q-value outputs.
    pub const ALL: [ShotMode; 4] = [Self::Left, Self::Right, Self::Front, Self::Back];

    pub fn index(self) -> usize {
        match self {
            Self::Left => 0,
            Self::Right => 1,
            Self::Front => 2,
            Self::Back => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Azimuth offset from the actor heading, counter-clockwise.
    pub fn azimuth_offset(self) -> f64 {
        match self {
            Self::Front => 0.0,
            Self::Left => FRAC_PI_2,
            Self::Right => -FRAC_PI_2,
            Self::Back => PI,
        }
    }

    /// Counter-clockwise quarter turns from the front position.
    fn quarter_turns(self) -> i32 {
        match self {
            Self::Front => 0,
            Self::Left => 1,
            Self::Back => 2,
            Self::Right => 3,
        }
    }

    /// Angle swept when switching from `self` to `to`: 0, 90 or 180 degrees.
    pub fn switch_angle(self, to: ShotMode) -> u32 {
        match (to.quarter_turns() - self.quarter_turns()).rem_euclid(4) {
            0 => 0,
            2 => 180,
            _ => 90,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Left => "left",
            Self::Right => "right",
            Self::Front => "front",
            Self::Back => "back",
        }
    }
}

impl std::fmt::Display for ShotMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ShotMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shot mode '{s}'")))
    }
}

/// Signed azimuth sweep from one mode to another along the shorter arc.
/// Half turns pass behind the actor (left/right) or through the left side
/// (front/back), so the drone never crosses in front of the lens.
pub fn arc_delta(from: ShotMode, to: ShotMode) -> f64 {
    match (to.quarter_turns() - from.quarter_turns()).rem_euclid(4) {
        0 => 0.0,
        1 => FRAC_PI_2,
        3 => -FRAC_PI_2,
        _ => match from {
            ShotMode::Left | ShotMode::Front => PI,
            ShotMode::Right | ShotMode::Back => -PI,
        },
    }
}

/// Drone and camera geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraRig {
    pub orbit_radius: f64,
    /// Drone altitude above the actor's head, meters.
    pub altitude_offset: f64,
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub actor_height: f64,
    pub actor_width: f64,
    /// Height of the point the camera tracks on the actor, meters.
    pub aim_height: f64,
    pub safety_clearance: f64,
}

impl Default for CameraRig {
    fn default() -> Self {
        Self {
            orbit_radius: 5.0,
            altitude_offset: 2.0,
            horizontal_fov: 90f64.to_radians(),
            vertical_fov: 60f64.to_radians(),
            actor_height: 1.8,
            actor_width: 0.5,
            aim_height: 1.8,
            safety_clearance: 0.5,
        }
    }
}

impl CameraRig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.orbit_radius,
            self.altitude_offset,
            self.horizontal_fov,
            self.vertical_fov,
            self.actor_height,
            self.actor_width,
            self.aim_height,
            self.safety_clearance,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("camera rig values must be positive"));
        }
        if self.horizontal_fov >= PI || self.vertical_fov >= PI {
            return Err(Error::config("field of view must be below pi"));
        }
        Ok(())
    }

    /// Drone altitude above ground.
    pub fn drone_altitude(&self) -> f64 {
        self.actor_height + self.altitude_offset
    }

    /// Tilt held while the drone sits on its orbit over flat ground.
    pub fn steady_tilt(&self) -> f64 {
        (self.drone_altitude() - self.aim_height).atan2(self.orbit_radius)
    }
}

/// Where the drone is and where its camera looks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DronePose {
    pub position: [f64; 3],
    /// Orbit azimuth relative to the actor heading.
    pub azimuth_offset: f64,
    /// Camera yaw (world frame) and downward tilt, both toward the aim point.
    pub yaw: f64,
    pub tilt: f64,
}

/// Actor pose at a fraction `t` of the time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorSample {
    pub t: f64,
    pub position: [f64; 2],
    pub heading: f64,
}

fn pose_at(azimuth_offset: f64, actor: [f64; 2], heading: f64, rig: &CameraRig) -> DronePose {
    let az = heading + azimuth_offset;
    let position = [
        actor[0] + rig.orbit_radius * az.cos(),
        actor[1] + rig.orbit_radius * az.sin(),
        rig.drone_altitude(),
    ];
    let (yaw, tilt) = look_at(position, actor, rig);
    DronePose {
        position,
        azimuth_offset,
        yaw,
        tilt,
    }
}

fn look_at(drone: [f64; 3], actor: [f64; 2], rig: &CameraRig) -> (f64, f64) {
    let dx = actor[0] - drone[0];
    let dy = actor[1] - drone[1];
    let yaw = dy.atan2(dx);
    let tilt = (drone[2] - rig.aim_height).atan2(dx.hypot(dy));
    (yaw, tilt)
}

/// Settled viewpoint for a shot mode.
pub fn viewpoint_for(mode: ShotMode, actor: [f64; 2], heading: f64, rig: &CameraRig) -> DronePose {
    pose_at(mode.azimuth_offset(), actor, heading, rig)
}

/// Frame times as fractions of the time step: uniform, both ends included.
/// A single frame is taken at the end of the step.
pub fn frame_fractions(n_frames: usize) -> Vec<f64> {
    match n_frames {
        0 => Vec::new(),
        1 => vec![1.0],
        n => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Drone poses while switching shot modes. The azimuth sweeps the shorter
/// arc during the first half of the step, then holds; radius and altitude
/// stay fixed. One pose per actor sample.
pub fn transition_arc(
    from: ShotMode,
    to: ShotMode,
    actor: &[ActorSample],
    rig: &CameraRig,
) -> Result<Vec<DronePose>> {
    if actor.is_empty() {
        return Err(Error::invalid("transition needs at least one frame"));
    }
    let start = from.azimuth_offset();
    let delta = arc_delta(from, to);
    Ok(actor
        .iter()
        .map(|s| {
            let progress = (s.t / 0.5).clamp(0.0, 1.0);
            pose_at(start + progress * delta, s.position, s.heading, rig)
        })
        .collect())
}

/// Per-frame shot measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    /// Downward angle of the camera-to-actor ray, radians.
    pub tilt: f64,
    /// Fraction of the image covered by the actor's bounding box.
    pub presence_ratio: f64,
    pub occluded: bool,
    pub collided: bool,
}

/// Scores one frame. Occlusion forces the presence ratio to zero.
pub fn frame_metrics(
    drone: [f64; 3],
    actor: [f64; 2],
    map: &HeightMap,
    rig: &CameraRig,
) -> FrameMetrics {
    let (_, tilt) = look_at(drone, actor, rig);
    let aim = [actor[0], actor[1], rig.aim_height];
    let occluded = ray_occluded(map, drone, aim);
    let presence_ratio = if occluded {
        0.0
    } else {
        presence_ratio(drone, actor, rig)
    };
    let collided = match map.cell_at(drone[0], drone[1]) {
        None => true,
        Some((ix, iy)) => map.get(ix, iy).unwrap_or(0.0) >= drone[2] - rig.safety_clearance,
    };
    FrameMetrics {
        tilt,
        presence_ratio,
        occluded,
        collided,
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot(a, a).sqrt();
    (n > 1e-12).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

/// Image fraction covered by the actor, modeled as an upright
/// `actor_width x actor_height` card facing the camera, projected through a
/// pinhole camera aimed at the aim point. Clipped to the image, in `[0, 1]`.
pub fn presence_ratio(drone: [f64; 3], actor: [f64; 2], rig: &CameraRig) -> f64 {
    let aim = [actor[0], actor[1], rig.aim_height];
    let Some(forward) = normalize(sub(aim, drone)) else {
        return 1.0;
    };
    let right = normalize(cross(forward, [0.0, 0.0, 1.0])).unwrap_or([1.0, 0.0, 0.0]);
    let up = cross(right, forward);

    let to_cam = [drone[0] - actor[0], drone[1] - actor[1]];
    let d = to_cam[0].hypot(to_cam[1]);
    let side = if d > 1e-12 {
        [-to_cam[1] / d, to_cam[0] / d]
    } else {
        [1.0, 0.0]
    };
    let half_w = rig.actor_width / 2.0;
    let tan_h = (rig.horizontal_fov / 2.0).tan();
    let tan_v = (rig.vertical_fov / 2.0).tan();

    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for sw in [-half_w, half_w] {
        for z in [0.0, rig.actor_height] {
            let corner = [actor[0] + sw * side[0], actor[1] + sw * side[1], z];
            let v = sub(corner, drone);
            let depth = dot(v, forward);
            if depth <= 1e-9 {
                return 1.0;
            }
            let u = dot(v, right) / (depth * tan_h);
            let w = dot(v, up) / (depth * tan_v);
            x0 = x0.min(u);
            x1 = x1.max(u);
            y0 = y0.min(w);
            y1 = y1.max(w);
        }
    }
    let wx = (x1.min(1.0) - x0.max(-1.0)).max(0.0);
    let wy = (y1.min(1.0) - y0.max(-1.0)).max(0.0);
    (wx * wy / 4.0).clamp(0.0, 1.0)
}

/// Cell-stepping line-of-sight test. Walks every cell the ray's ground
/// projection crosses; the ray is blocked when a cell is taller than the
/// lowest point of the ray over that cell.
pub fn ray_occluded(map: &HeightMap, from: [f64; 3], to: [f64; 3]) -> bool {
    let res = map.resolution();
    let (px, py) = (from[0] / res, from[1] / res);
    let (dx, dy) = (to[0] / res - px, to[1] / res - py);
    let z_at = |t: f64| from[2] + (to[2] - from[2]) * t;

    let mut ix = px.floor() as i64;
    let mut iy = py.floor() as i64;
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        (ix as f64 + 1.0 - px) / dx
    } else if dx < 0.0 {
        (px - ix as f64) / -dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        (iy as f64 + 1.0 - py) / dy
    } else if dy < 0.0 {
        (py - iy as f64) / -dy
    } else {
        f64::INFINITY
    };

    let cell_height = |ix: i64, iy: i64| {
        if ix < 0 || iy < 0 {
            0.0
        } else {
            map.get(ix as usize, iy as usize).unwrap_or(0.0)
        }
    };

    let max_steps = (dx.abs() + dy.abs()) as usize + 4;
    let mut t_in = 0.0;
    for _ in 0..max_steps {
        let t_out = t_max_x.min(t_max_y).min(1.0);
        if cell_height(ix, iy) > z_at(t_in).min(z_at(t_out)) {
            return true;
        }
        if t_out >= 1.0 {
            break;
        }
        if t_max_x < t_max_y {
            ix += step_x;
            t_in = t_max_x;
            t_max_x += delta_x;
        } else {
            iy += step_y;
            t_in = t_max_y;
            t_max_y += delta_y;
        }
    }
    false
}

/// One row of an exported frame trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTraceRow {
    pub step: u32,
    pub frame: u32,
    pub theta: f64,
    pub pr: f64,
    pub occluded: bool,
    pub collided: bool,
}

/// Writes frame traces as CSV with header
/// `step,frame,theta,pr,occluded,collided`.
pub fn write_frame_trace<W: Write>(out: W, rows: &[FrameTraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> HeightMap {
        HeightMap::flat(64, 64, 1.0, 20.0).unwrap()
    }

    #[test]
    fn back_viewpoint_trails_the_actor() {
        let rig = CameraRig::default();
        let pose = viewpoint_for(ShotMode::Back, [30.0, 30.0], 0.0, &rig);
        assert!((pose.position[0] - 25.0).abs() < 1e-12);
        assert!((pose.position[1] - 30.0).abs() < 1e-12);
        assert!((pose.position[2] - 3.8).abs() < 1e-12);
        assert!(pose.yaw.abs() < 1e-12);
    }

    #[test]
    fn left_and_right_mirror() {
        let rig = CameraRig::default();
        let heading = 0.7;
        let actor = [30.0, 30.0];
        let l = viewpoint_for(ShotMode::Left, actor, heading, &rig);
        let r = viewpoint_for(ShotMode::Right, actor, heading, &rig);
        // Reflect r across the heading axis through the actor.
        let (s, c) = heading.sin_cos();
        let rel = [r.position[0] - actor[0], r.position[1] - actor[1]];
        let along = rel[0] * c + rel[1] * s;
        let across = -rel[0] * s + rel[1] * c;
        let mirrored = [
            actor[0] + along * c + across * s,
            actor[1] + along * s - across * c,
        ];
        assert!((mirrored[0] - l.position[0]).abs() < 1e-12);
        assert!((mirrored[1] - l.position[1]).abs() < 1e-12);
        assert_eq!(l.position[2], r.position[2]);
    }

    #[test]
    fn steady_tilt_closed_form() {
        let rig = CameraRig::default();
        let pose = viewpoint_for(ShotMode::Front, [30.0, 30.0], 1.0, &rig);
        let drop = rig.actor_height - rig.aim_height;
        let expected = (2.0 + drop).atan2(5.0);
        assert!((pose.tilt - expected).abs() < 1e-12);
        let m = frame_metrics(pose.position, [30.0, 30.0], &flat(), &rig);
        assert!((m.tilt - expected).abs() < 1e-12);
        assert!((rig.steady_tilt() - expected).abs() < 1e-15);
    }

    #[test]
    fn switch_angles() {
        use ShotMode::*;
        assert_eq!(Left.switch_angle(Left), 0);
        assert_eq!(Left.switch_angle(Back), 90);
        assert_eq!(Left.switch_angle(Front), 90);
        assert_eq!(Left.switch_angle(Right), 180);
        assert_eq!(Front.switch_angle(Back), 180);
    }

    #[test]
    fn half_turns_pass_behind_or_left() {
        use ShotMode::*;
        for (from, to) in [(Left, Right), (Right, Left)] {
            let mid = from.azimuth_offset() + arc_delta(from, to) / 2.0;
            assert!((mid.rem_euclid(2.0 * PI) - PI).abs() < 1e-12);
        }
        for (from, to) in [(Front, Back), (Back, Front)] {
            let mid = from.azimuth_offset() + arc_delta(from, to) / 2.0;
            assert!((mid.rem_euclid(2.0 * PI) - FRAC_PI_2).abs() < 1e-12);
        }
    }

    fn stationary(n: usize) -> Vec<ActorSample> {
        frame_fractions(n)
            .into_iter()
            .map(|t| ActorSample {
                t,
                position: [30.0, 30.0],
                heading: 0.0,
            })
            .collect()
    }

    #[test]
    fn identity_transition_holds_azimuth() {
        let rig = CameraRig::default();
        let poses = transition_arc(ShotMode::Back, ShotMode::Back, &stationary(10), &rig).unwrap();
        assert!(poses.iter().all(|p| p.azimuth_offset == PI));
    }

    #[test]
    fn half_turn_steps_twice_as_far() {
        let rig = CameraRig::default();
        let max_step = |from, to| {
            let p = transition_arc(from, to, &stationary(12), &rig).unwrap();
            p.windows(2)
                .map(|w| (w[1].azimuth_offset - w[0].azimuth_offset).abs())
                .fold(0.0, f64::max)
        };
        let half = max_step(ShotMode::Left, ShotMode::Right);
        let quarter = max_step(ShotMode::Left, ShotMode::Back);
        assert!((half - 2.0 * quarter).abs() < 1e-12);
    }

    #[test]
    fn left_to_back_schedule() {
        let rig = CameraRig::default();
        let poses = transition_arc(ShotMode::Left, ShotMode::Back, &stationary(4), &rig).unwrap();
        let deg: Vec<f64> = poses.iter().map(|p| p.azimuth_offset.to_degrees()).collect();
        // t = 0, 1/3, 2/3, 1 with the sweep done at t = 1/2.
        let expected = [90.0, 150.0, 180.0, 180.0];
        for (d, e) in deg.iter().zip(expected) {
            assert!((d - e).abs() < 1e-9, "{deg:?}");
        }
        assert!(deg.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empty_transition_is_an_error() {
        let rig = CameraRig::default();
        assert!(transition_arc(ShotMode::Left, ShotMode::Back, &[], &rig).is_err());
    }

    #[test]
    fn flat_map_is_clear() {
        let rig = CameraRig::default();
        for mode in ShotMode::ALL {
            let pose = viewpoint_for(mode, [30.0, 30.0], 0.3, &rig);
            let m = frame_metrics(pose.position, [30.0, 30.0], &flat(), &rig);
            assert!(!m.occluded && !m.collided);
            assert!(m.presence_ratio > 0.0);
        }
    }

    #[test]
    fn wall_between_camera_and_actor_occludes() {
        let rig = CameraRig::default();
        let mut map = flat();
        for iy in 20..40 {
            map.raise(28, iy, 10.0);
        }
        let actor = [30.5, 30.5];
        let drone = [25.5, 30.5, 4.0];
        let m = frame_metrics(drone, actor, &map, &rig);
        assert!(m.occluded);
        assert_eq!(m.presence_ratio, 0.0);
    }

    #[test]
    fn drone_inside_obstacle_collides() {
        let rig = CameraRig::default();
        let mut map = flat();
        map.raise(25, 30, 3.8);
        let m = frame_metrics([25.5, 30.5, 3.8], [30.5, 30.5], &map, &rig);
        assert!(m.collided);
        let m = frame_metrics([-1.0, 30.5, 3.8], [30.5, 30.5], &map, &rig);
        assert!(m.collided);
    }

    #[test]
    fn presence_ratio_matches_pinhole_formula_when_level() {
        let rig = CameraRig::default();
        let actor = [30.0, 30.0];
        for d in [4.0, 5.0, 8.0, 12.0] {
            let drone = [actor[0] - d, actor[1], rig.aim_height];
            let pr = presence_ratio(drone, actor, &rig);
            let expected = rig.actor_width * rig.actor_height
                / (4.0
                    * d
                    * d
                    * (rig.horizontal_fov / 2.0).tan()
                    * (rig.vertical_fov / 2.0).tan());
            assert!((pr - expected).abs() < 1e-6, "d={d}: {pr} vs {expected}");
        }
    }

    #[test]
    fn frame_trace_csv_header() {
        let mut buf = Vec::new();
        let row = FrameTraceRow {
            step: 1,
            frame: 2,
            theta: 0.5,
            pr: 0.01,
            occluded: false,
            collided: true,
        };
        write_frame_trace(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,frame,theta,pr,occluded,collided\n"));
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let back: FrameTraceRow = rd.deserialize().next().unwrap().unwrap();
        assert_eq!(back, row);
    }
}
