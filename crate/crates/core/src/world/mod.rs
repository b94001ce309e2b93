//! 2.5D height-map worlds: the grid itself, the actor's walking track, the
//! per-episode world state, procedural generators and file IO.

mod actor;
mod catalog;
mod crop;
mod gen;
mod io;

use serde::{Deserialize, Serialize};

use crate::camera::ShotMode;
use crate::error::{Error, Result};

pub use actor::{advance_actor, MAX_ROAM_RETRIES};
pub use catalog::{load_bundle, BlockRoute, WorldBundle, WorldKind};
pub use crop::{crop_local_map, LocalMap, CROP_CELLS, CROP_SIZE};
pub use gen::{
    generate, generate_bigmap_section, generate_block_world, BigmapSection, BlockParams,
    CityParams, GeneratedWorld, MountainParams, Obstacle, PillarParams, Span, WorldGenConfig,
};
pub use io::{load_world, read_pgm, save_world, write_pgm, WorldSidecar};

/// Smallest allowed map side, in cells. Keeps a 24x24 crop inside the map
/// for any actor position after edge clamping.
pub const MIN_MAP_CELLS: usize = 48;

/// Grid of obstacle heights. Cell `(ix, iy)` covers
/// `[ix, ix + 1) x [iy, iy + 1)` in units of `resolution` meters; `y` grows
/// "north".
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    width: usize,
    height: usize,
    resolution: f64,
    max_obstacle_height: f64,
    cells: Vec<f64>,
}

impl HeightMap {
    /// An obstacle-free map.
    pub fn flat(
        width: usize,
        height: usize,
        resolution: f64,
        max_obstacle_height: f64,
    ) -> Result<Self> {
        Self::from_cells(
            width,
            height,
            resolution,
            max_obstacle_height,
            vec![0.0; width * height],
        )
    }

    /// Builds a map from row-major cells (`iy * width + ix`).
    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        max_obstacle_height: f64,
        cells: Vec<f64>,
    ) -> Result<Self> {
        if width < MIN_MAP_CELLS || height < MIN_MAP_CELLS {
            return Err(Error::config(format!(
                "map must be at least {MIN_MAP_CELLS}x{MIN_MAP_CELLS} cells, got {width}x{height}"
            )));
        }
        if !(resolution > 0.0) || !(max_obstacle_height > 0.0) {
            return Err(Error::config(
                "resolution and max obstacle height must be positive",
            ));
        }
        if cells.len() != width * height {
            return Err(Error::Shape {
                expected: width * height,
                got: cells.len(),
            });
        }
        if let Some(bad) = cells
            .iter()
            .find(|h| !(**h >= 0.0 && **h <= max_obstacle_height))
        {
            return Err(Error::invalid(format!(
                "cell height {bad} outside [0, {max_obstacle_height}]"
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            max_obstacle_height,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn max_obstacle_height(&self) -> f64 {
        self.max_obstacle_height
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// World extent in meters as `(x, y)`.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        (ix < self.width && iy < self.height).then(|| self.cells[iy * self.width + ix])
    }

    /// Raises a cell to at least `h`, clamped to the map's height range.
    pub fn raise(&mut self, ix: usize, iy: usize, h: f64) {
        if ix < self.width && iy < self.height {
            let cell = &mut self.cells[iy * self.width + ix];
            *cell = cell.max(h.clamp(0.0, self.max_obstacle_height));
        }
    }

    /// Cell containing the world point, if it lies on the map.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x / self.resolution).floor();
        let fy = (y / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.cell_at(x, y).is_some()
    }

    /// Obstacle height under a world point; 0 off the map.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.cell_at(x, y)
            .map(|(ix, iy)| self.cells[iy * self.width + ix])
            .unwrap_or(0.0)
    }

    pub fn is_free(&self, ix: usize, iy: usize) -> bool {
        self.get(ix, iy) == Some(0.0)
    }

    /// World coordinates of a cell's center.
    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            (ix as f64 + 0.5) * self.resolution,
            (iy as f64 + 0.5) * self.resolution,
        ]
    }

    /// Linear 8-bit quantization with `max_obstacle_height -> 255`, rounding
    /// half up.
    pub fn quantize(&self, h: f64) -> u8 {
        let scaled = 255.0 * h / self.max_obstacle_height;
        (scaled + 0.5).floor().clamp(0.0, 255.0) as u8
    }

    /// Quantized cells, row-major from `iy = 0`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.cells.iter().map(|&h| self.quantize(h)).collect()
    }
}

/// How the actor moves through the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackMode {
    FixedRoute,
    Roaming,
}

#[derive(Deserialize)]
struct RawTrack {
    waypoints: Vec<[f64; 2]>,
    speed: f64,
    mode: TrackMode,
}

/// The actor's route: a polyline walked at constant speed, or a start point
/// for roaming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrack")]
pub struct ActorTrack {
    waypoints: Vec<[f64; 2]>,
    speed: f64,
    mode: TrackMode,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl TryFrom<RawTrack> for ActorTrack {
    type Error = Error;

    fn try_from(raw: RawTrack) -> Result<Self> {
        ActorTrack::new(raw.waypoints, raw.speed, raw.mode)
    }
}

impl ActorTrack {
    pub fn new(waypoints: Vec<[f64; 2]>, speed: f64, mode: TrackMode) -> Result<Self> {
        if !(speed > 0.0) {
            return Err(Error::config("actor speed must be positive"));
        }
        let min_points = match mode {
            TrackMode::FixedRoute => 2,
            TrackMode::Roaming => 1,
        };
        if waypoints.len() < min_points {
            return Err(Error::config(format!(
                "{mode:?} track needs at least {min_points} waypoint(s)"
            )));
        }
        if waypoints.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("consecutive waypoints must be distinct"));
        }
        let mut cumulative = Vec::with_capacity(waypoints.len());
        let mut total = 0.0;
        cumulative.push(0.0);
        for w in waypoints.windows(2) {
            total += dist(w[0], w[1]);
            cumulative.push(total);
        }
        Ok(Self {
            waypoints,
            speed,
            mode,
            cumulative,
        })
    }

    /// Straight route between two points.
    pub fn straight(from: [f64; 2], to: [f64; 2], speed: f64) -> Result<Self> {
        Self::new(vec![from, to], speed, TrackMode::FixedRoute)
    }

    /// Checks that every waypoint lies on free ground inside the map.
    pub fn validate_on(&self, map: &HeightMap) -> Result<()> {
        for &[x, y] in &self.waypoints {
            match map.cell_at(x, y) {
                Some((ix, iy)) if map.is_free(ix, iy) => {}
                Some(_) => {
                    return Err(Error::config(format!(
                        "waypoint ({x}, {y}) is not on free ground"
                    )))
                }
                None => {
                    return Err(Error::config(format!(
                        "waypoint ({x}, {y}) is outside the map"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.waypoints
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn mode(&self) -> TrackMode {
        self.mode
    }

    /// Same track in a different mode (e.g. roaming from a route's start).
    pub fn with_mode(&self, mode: TrackMode) -> Result<Self> {
        let waypoints = match mode {
            TrackMode::FixedRoute => self.waypoints.clone(),
            TrackMode::Roaming => vec![self.waypoints[0]],
        };
        Self::new(waypoints, self.speed, mode)
    }

    /// Polyline arc length.
    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Position and heading at arc length `s` (clamped to the route).
    pub fn point_at(&self, s: f64) -> ([f64; 2], f64) {
        let n = self.waypoints.len();
        if n == 1 {
            return (self.waypoints[0], 0.0);
        }
        let s = s.clamp(0.0, self.length());
        // Segment i spans [cumulative[i], cumulative[i + 1]); the end point
        // belongs to the last segment.
        let seg = match self.cumulative.partition_point(|&c| c <= s) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let a = self.waypoints[seg];
        let b = self.waypoints[seg + 1];
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let t = ((s - self.cumulative[seg]) / len).clamp(0.0, 1.0);
        let heading = (b[1] - a[1]).atan2(b[0] - a[0]);
        ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], heading)
    }
}

/// Actor bookkeeping carried between time steps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActorProgress {
    /// Distance walked since the episode started, meters. For fixed routes
    /// this is the arc-length position on the route.
    pub distance: f64,
    /// Raised when a fixed route's final waypoint has been reached.
    pub route_finished: bool,
    /// Remaining cell centers of the current roaming path.
    pub roam_plan: Vec<[f64; 2]>,
}

/// Everything that changes during an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub actor_position: [f64; 2],
    pub actor_heading: f64,
    pub drone_position: [f64; 3],
    pub shot_mode: ShotMode,
    pub repetition_count: u32,
    pub step_index: u32,
    pub progress: ActorProgress,
}

impl WorldState {
    /// Actor placed at arc length `offset` on the track, drone not yet placed.
    pub fn at_offset(track: &ActorTrack, offset: f64, shot_mode: ShotMode) -> Self {
        let (actor_position, actor_heading) = track.point_at(offset);
        Self {
            actor_position,
            actor_heading,
            drone_position: [actor_position[0], actor_position[1], 0.0],
            shot_mode,
            repetition_count: 1,
            step_index: 0,
            progress: ActorProgress {
                distance: offset,
                ..ActorProgress::default()
            },
        }
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}
