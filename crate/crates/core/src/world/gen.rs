//! Seeded procedural worlds. Every generator is a pure function of
//! `(seed, config)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActorTrack, HeightMap, TrackMode};
use crate::error::{Error, Result};

/// Closed sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(Error::config(format!(
                "{name} range [{}, {}] is empty or inverted",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    /// Integer sample, at least 1.
    fn cells<R: Rng>(&self, rng: &mut R) -> usize {
        self.sample(rng).round().max(1.0) as usize
    }
}

/// Simple block world: a straight corridor with blocks alternating left and
/// right of the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockParams {
    /// Length of the actor path, cells.
    pub route_length: usize,
    /// Map side across the corridor, cells.
    pub corridor_cells: usize,
    pub block_length: Span,
    pub block_gap: Span,
    /// Lateral extent of a block, cells.
    pub block_depth: Span,
    /// Distance from the path row to a block's inner edge, cells (>= 2).
    pub block_offset: Span,
    pub block_height: Span,
}

impl Default for BlockParams {
    fn default() -> Self {
        Self {
            route_length: 200,
            corridor_cells: 48,
            block_length: Span::new(6.0, 14.0),
            block_gap: Span::new(2.0, 6.0),
            block_depth: Span::new(3.0, 8.0),
            block_offset: Span::new(2.0, 3.0),
            block_height: Span::new(1.0, 12.0),
        }
    }
}

/// Bigmap block section: city-like blocks on both sides, varying corridor
/// widths and L-shaped footprints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CityParams {
    pub route_length: usize,
    pub corridor_cells: usize,
    pub block_length: Span,
    pub block_gap: Span,
    pub block_depth: Span,
    /// Half corridor width: path row to block inner edge, cells (>= 2).
    pub corridor_half_width: Span,
    pub block_height: Span,
    /// Probability that a block gets a second, offset wing.
    pub l_shape_probability: f64,
}

impl Default for CityParams {
    fn default() -> Self {
        Self {
            route_length: 160,
            corridor_cells: 48,
            block_length: Span::new(5.0, 16.0),
            block_gap: Span::new(1.0, 5.0),
            block_depth: Span::new(3.0, 12.0),
            corridor_half_width: Span::new(2.0, 5.0),
            block_height: Span::new(2.0, 16.0),
            l_shape_probability: 0.35,
        }
    }
}

/// Bigmap pillar section: two parallel rows of slim pillars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PillarParams {
    pub route_length: usize,
    pub corridor_cells: usize,
    pub spacing: Span,
    /// Path row to pillar row, cells (>= 2).
    pub row_offset: Span,
    pub height: Span,
}

impl Default for PillarParams {
    fn default() -> Self {
        Self {
            route_length: 160,
            corridor_cells: 48,
            spacing: Span::new(4.0, 7.0),
            row_offset: Span::new(3.0, 4.0),
            height: Span::new(4.0, 18.0),
        }
    }
}

/// Bigmap mountain section: three rows of pyramid-profile mountains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MountainParams {
    pub route_length: usize,
    pub corridor_cells: usize,
    /// Half-width of a mountain base, cells.
    pub base_half_width: Span,
    /// Peak heights are drawn uniformly from this range.
    pub peak_height: Span,
    pub gap: Span,
}

impl Default for MountainParams {
    fn default() -> Self {
        Self {
            route_length: 160,
            corridor_cells: 64,
            base_half_width: Span::new(4.0, 7.0),
            peak_height: Span::new(6.0, 16.0),
            gap: Span::new(0.0, 3.0),
        }
    }
}

/// World-generation config; loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenConfig {
    /// Meters per cell.
    pub resolution: f64,
    pub max_obstacle_height: f64,
    pub actor_speed: f64,
    /// Free cells before the route start and after its end.
    pub margin: usize,
    pub blocks: BlockParams,
    pub city: CityParams,
    pub pillars: PillarParams,
    pub mountains: MountainParams,
}

impl Default for WorldGenConfig {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            max_obstacle_height: 20.0,
            actor_speed: 1.5,
            margin: 14,
            blocks: BlockParams::default(),
            city: CityParams::default(),
            pillars: PillarParams::default(),
            mountains: MountainParams::default(),
        }
    }
}

impl WorldGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.max_obstacle_height > 0.0 && self.actor_speed > 0.0) {
            return Err(Error::config(
                "resolution, max height and actor speed must be positive",
            ));
        }
        let b = &self.blocks;
        for (name, span) in [
            ("blocks.block_length", b.block_length),
            ("blocks.block_gap", b.block_gap),
            ("blocks.block_depth", b.block_depth),
            ("blocks.block_offset", b.block_offset),
            ("blocks.block_height", b.block_height),
            ("city.block_length", self.city.block_length),
            ("city.block_gap", self.city.block_gap),
            ("city.block_depth", self.city.block_depth),
            ("city.corridor_half_width", self.city.corridor_half_width),
            ("city.block_height", self.city.block_height),
            ("pillars.spacing", self.pillars.spacing),
            ("pillars.row_offset", self.pillars.row_offset),
            ("pillars.height", self.pillars.height),
            ("mountains.base_half_width", self.mountains.base_half_width),
            ("mountains.peak_height", self.mountains.peak_height),
            ("mountains.gap", self.mountains.gap),
        ] {
            span.validate(name)?;
        }
        for (name, span) in [
            ("blocks.block_offset", b.block_offset),
            ("city.corridor_half_width", self.city.corridor_half_width),
            ("pillars.row_offset", self.pillars.row_offset),
        ] {
            if span.min < 2.0 {
                return Err(Error::config(format!(
                    "{name} must keep one free cell beside the path (min >= 2)"
                )));
            }
        }
        for (name, span) in [
            ("blocks.block_height", b.block_height),
            ("city.block_height", self.city.block_height),
            ("pillars.height", self.pillars.height),
            ("mountains.peak_height", self.mountains.peak_height),
        ] {
            if span.min < 0.0 || span.max > self.max_obstacle_height {
                return Err(Error::config(format!(
                    "{name} must lie within [0, max_obstacle_height]"
                )));
            }
        }
        Ok(())
    }
}

/// Axis-aligned obstacle footprint in cells (`x1`, `y1` exclusive) and its
/// tallest cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub peak: f64,
}

impl Obstacle {
    pub fn footprint(&self) -> (usize, usize) {
        (self.x1 - self.x0, self.y1 - self.y0)
    }
}

/// Generator output.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedWorld {
    pub map: HeightMap,
    pub track: ActorTrack,
    pub obstacles: Vec<Obstacle>,
}

/// Sections of the larger "bigmap" environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigmapSection {
    Blocks,
    Pillars,
    Mountains,
}

impl std::str::FromStr for BigmapSection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blocks" => Ok(Self::Blocks),
            "pillars" => Ok(Self::Pillars),
            "mountains" => Ok(Self::Mountains),
            other => Err(Error::config(format!("unknown bigmap section '{other}'"))),
        }
    }
}

impl std::fmt::Display for BigmapSection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Blocks => "blocks",
            Self::Pillars => "pillars",
            Self::Mountains => "mountains",
        })
    }
}

/// Corridor layout shared by every generator: the path runs along +x through
/// the center of row `path_row`.
struct Corridor {
    map: HeightMap,
    path_row: usize,
    x_start: usize,
    x_end: usize,
    obstacles: Vec<Obstacle>,
}

impl Corridor {
    fn new(cfg: &WorldGenConfig, route_length: usize, cross_cells: usize, path_row: usize) -> Result<Self> {
        let width = route_length + 2 * cfg.margin;
        let map = HeightMap::flat(width, cross_cells, cfg.resolution, cfg.max_obstacle_height)?;
        Ok(Self {
            map,
            path_row,
            x_start: cfg.margin,
            x_end: cfg.margin + route_length,
            obstacles: Vec::new(),
        })
    }

    /// Fills a rectangle, clipped to the map and never touching the rows
    /// within one cell of the path.
    fn block(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, h: f64) {
        let x1 = x1.min(self.map.width());
        let y1 = y1.min(self.map.height());
        if x0 >= x1 || y0 >= y1 {
            return;
        }
        debug_assert!(y1 < self.path_row || y0 >= self.path_row + 2);
        for iy in y0..y1 {
            for ix in x0..x1 {
                self.map.raise(ix, iy, h);
            }
        }
        self.obstacles.push(Obstacle {
            x0,
            y0,
            x1,
            y1,
            peak: h.clamp(0.0, self.map.max_obstacle_height()),
        });
    }

    /// Rows of a band on one side of the path: `offset` cells from the path
    /// row to the inner edge, `depth` cells deep.
    fn band(&self, left: bool, offset: usize, depth: usize) -> (usize, usize) {
        if left {
            let y0 = self.path_row + offset;
            (y0, y0 + depth)
        } else {
            let y1 = (self.path_row + 1).saturating_sub(offset);
            (y1.saturating_sub(depth), y1)
        }
    }

    fn finish(self, speed: f64) -> Result<GeneratedWorld> {
        let res = self.map.resolution();
        let y = (self.path_row as f64 + 0.5) * res;
        let track = ActorTrack::new(
            vec![
                [self.x_start as f64 * res, y],
                [self.x_end as f64 * res, y],
            ],
            speed,
            TrackMode::FixedRoute,
        )?;
        track.validate_on(&self.map)?;
        Ok(GeneratedWorld {
            map: self.map,
            track,
            obstacles: self.obstacles,
        })
    }
}

/// Block world: blocks alternate left and right of a straight path with
/// varying lengths, depths and heights.
pub fn generate_block_world(seed: u64, cfg: &WorldGenConfig) -> Result<GeneratedWorld> {
    cfg.validate()?;
    let p = &cfg.blocks;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Corridor::new(cfg, p.route_length, p.corridor_cells, p.corridor_cells / 2)?;
    let mut left = rng.random_bool(0.5);
    let mut x = cfg.margin / 2;
    let end = c.map.width() - cfg.margin / 2;
    while x < end {
        let len = p.block_length.cells(&mut rng);
        let offset = p.block_offset.cells(&mut rng);
        let depth = p.block_depth.cells(&mut rng);
        let h = p.block_height.sample(&mut rng);
        let (y0, y1) = c.band(left, offset, depth);
        c.block(x, y0, (x + len).min(end), y1, h);
        x += len + p.block_gap.sample(&mut rng).round() as usize;
        left = !left;
    }
    c.finish(cfg.actor_speed)
}

/// One section of the bigmap environment.
pub fn generate_bigmap_section(
    section: BigmapSection,
    seed: u64,
    cfg: &WorldGenConfig,
) -> Result<GeneratedWorld> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match section {
        BigmapSection::Blocks => city(cfg, &mut rng),
        BigmapSection::Pillars => pillars(cfg, &mut rng),
        BigmapSection::Mountains => mountains(cfg, &mut rng),
    }
}

fn city(cfg: &WorldGenConfig, rng: &mut ChaCha8Rng) -> Result<GeneratedWorld> {
    let p = &cfg.city;
    let mut c = Corridor::new(cfg, p.route_length, p.corridor_cells, p.corridor_cells / 2)?;
    let end = c.map.width();
    for left in [true, false] {
        let mut x = rng.random_range(0..4);
        while x < end {
            let len = p.block_length.cells(rng);
            let offset = p.corridor_half_width.cells(rng);
            let depth = p.block_depth.cells(rng);
            let h = p.block_height.sample(rng);
            let (y0, y1) = c.band(left, offset, depth);
            c.block(x, y0, x + len, y1, h);
            if rng.random_bool(p.l_shape_probability) {
                // Second wing: narrower along x, set back from the street.
                let wing = (len / 2).max(1);
                let extra = p.block_depth.cells(rng);
                let (w0, w1) = c.band(left, offset + depth, extra);
                let wx = if rng.random_bool(0.5) { x } else { x + len - wing };
                c.block(wx, w0, wx + wing, w1, p.block_height.sample(rng));
            }
            x += len + p.block_gap.cells(rng);
        }
    }
    c.finish(cfg.actor_speed)
}

fn pillars(cfg: &WorldGenConfig, rng: &mut ChaCha8Rng) -> Result<GeneratedWorld> {
    let p = &cfg.pillars;
    let mut c = Corridor::new(cfg, p.route_length, p.corridor_cells, p.corridor_cells / 2)?;
    let end = c.map.width();
    for left in [true, false] {
        let offset = p.row_offset.cells(rng);
        let mut x = rng.random_range(0..3);
        while x < end {
            let sx = rng.random_range(1..=2);
            let sy = rng.random_range(1..=2);
            let (y0, y1) = c.band(left, offset, sy);
            c.block(x, y0, x + sx, y1, p.height.sample(rng));
            x += p.spacing.cells(rng).max(sx + 1);
        }
    }
    c.finish(cfg.actor_speed)
}

fn mountains(cfg: &WorldGenConfig, rng: &mut ChaCha8Rng) -> Result<GeneratedWorld> {
    let p = &cfg.mountains;
    let max_b = p.base_half_width.max.round().max(1.0) as usize;
    // Path row leaves room for one row on the right and two on the left.
    let path_row = 2 * max_b + 3;
    let needed = path_row + 4 * max_b + 8;
    if p.corridor_cells < needed {
        return Err(Error::config(format!(
            "mountain section needs corridor_cells >= {needed}"
        )));
    }
    let mut c = Corridor::new(cfg, p.route_length, p.corridor_cells, path_row)?;
    let end = c.map.width() as isize;
    // Row centers as signed lateral offsets from the path row; `None` means
    // "hug the path" (offset = half-width + 1).
    let rows: [(bool, Option<isize>); 3] = [
        (true, None),
        (false, None),
        (true, Some(2 * max_b as isize + 3 + max_b as isize)),
    ];
    for (left, fixed) in rows {
        let mut x: isize = rng.random_range(0..4i64) as isize;
        while x < end {
            let b = p.base_half_width.cells(rng) as isize;
            let peak = p.peak_height.sample(rng);
            let lateral = fixed.unwrap_or(b + 1);
            let cy = if left {
                path_row as isize + lateral
            } else {
                path_row as isize - lateral
            };
            let cx = x + b - 1;
            let mut footprint: Option<Obstacle> = None;
            for dy in -(b - 1)..=(b - 1) {
                for dx in -(b - 1)..=(b - 1) {
                    let (ix, iy) = (cx + dx, cy + dy);
                    if ix < 0 || iy < 0 {
                        continue;
                    }
                    let r = dx.abs().max(dy.abs()) as f64;
                    let h = peak * (1.0 - r / b as f64);
                    c.map.raise(ix as usize, iy as usize, h);
                    let o = footprint.get_or_insert(Obstacle {
                        x0: ix as usize,
                        y0: iy as usize,
                        x1: ix as usize + 1,
                        y1: iy as usize + 1,
                        peak,
                    });
                    o.x0 = o.x0.min(ix as usize);
                    o.y0 = o.y0.min(iy as usize);
                    o.x1 = o.x1.max(ix as usize + 1).min(c.map.width());
                    o.y1 = o.y1.max(iy as usize + 1).min(c.map.height());
                }
            }
            c.obstacles.extend(footprint);
            x += 2 * b - 1 + p.gap.sample(rng).round() as isize;
        }
    }
    c.finish(cfg.actor_speed)
}

/// Dispatches on a world kind.
pub fn generate(kind: super::WorldKind, seed: u64, cfg: &WorldGenConfig) -> Result<GeneratedWorld> {
    match kind {
        super::WorldKind::BlockWorld => generate_block_world(seed, cfg),
        super::WorldKind::Bigmap(section) => generate_bigmap_section(section, seed, cfg),
    }
}
