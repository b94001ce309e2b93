use std::path::Path;

use super::gen::{generate, BigmapSection, WorldGenConfig};
use super::{load_world, ActorTrack, HeightMap, TrackMode};
use crate::error::{Error, Result};

/// Generated world families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldKind {
    BlockWorld,
    Bigmap(BigmapSection),
}

impl std::str::FromStr for WorldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blockworld" => Ok(Self::BlockWorld),
            _ => match s.strip_prefix("bigmap:") {
                Some(section) => Ok(Self::Bigmap(section.parse()?)),
                None => Err(Error::config(format!(
                    "unknown world kind '{s}' (expected blockworld or bigmap:<section>)"
                ))),
            },
        }
    }
}

impl std::fmt::Display for WorldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::BlockWorld => f.write_str("blockworld"),
            Self::Bigmap(s) => write!(f, "bigmap:{s}"),
        }
    }
}

/// Named block-world routes; each is a separately generated corridor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRoute {
    Train,
    Test1,
    Test2,
}

impl BlockRoute {
    pub fn seed(self) -> u64 {
        match self {
            Self::Train => 1,
            Self::Test1 => 2,
            Self::Test2 => 3,
        }
    }
}

/// A map plus the actor track that runs through it.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldBundle {
    pub world: String,
    pub route: String,
    pub map: HeightMap,
    pub track: ActorTrack,
}

/// Resolves a `(world, route)` pair.
///
/// * `blockworld` with routes `train`, `test1`, `test2`, `roam` or `seed:<n>`
/// * `bigmap:<blocks|pillars|mountains>` with routes `main`, `roam` or `seed:<n>`
/// * a path to a `.pgm` map with a JSON sidecar, with routes `main` or `roam`
///
/// `roam` walks the training/main map in roaming mode.
pub fn load_bundle(world: &str, route: &str, cfg: &WorldGenConfig) -> Result<WorldBundle> {
    let (map, track) = if world.ends_with(".pgm") || Path::new(world).is_file() {
        let (map, track) = load_world(Path::new(world))?;
        match route {
            "main" | "roam" => {}
            other => return Err(Error::config(format!("unknown route '{other}' for map file"))),
        }
        (map, track)
    } else {
        let kind: WorldKind = world.parse()?;
        let seed = match (kind, route) {
            (WorldKind::BlockWorld, "train" | "roam") => BlockRoute::Train.seed(),
            (WorldKind::BlockWorld, "test1") => BlockRoute::Test1.seed(),
            (WorldKind::BlockWorld, "test2") => BlockRoute::Test2.seed(),
            (WorldKind::Bigmap(_), "main" | "roam") => 1,
            (_, other) => match other.strip_prefix("seed:") {
                Some(n) => n
                    .parse()
                    .map_err(|_| Error::config(format!("bad route seed '{n}'")))?,
                None => {
                    return Err(Error::config(format!(
                        "unknown route '{other}' for world '{world}'"
                    )))
                }
            },
        };
        let generated = generate(kind, seed, cfg)?;
        (generated.map, generated.track)
    };
    let track = if route == "roam" {
        track.with_mode(TrackMode::Roaming)?
    } else {
        track
    };
    track.validate_on(&map)?;
    Ok(WorldBundle {
        world: world.to_string(),
        route: route.to_string(),
        map,
        track,
    })
}
