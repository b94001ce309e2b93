//! Height maps on disk: 8-bit binary PGM (P5), north up, plus a JSON sidecar
//! carrying what the image cannot (resolution, height scale, actor track).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ActorTrack, HeightMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSidecar {
    pub resolution: f64,
    pub max_obstacle_height: f64,
    pub track: ActorTrack,
}

/// Writes the quantized map as P5. The first image row is the map's
/// northernmost row.
pub fn write_pgm(map: &HeightMap, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(map.width() * map.height() + 32);
    write!(out, "P5\n{} {}\n255\n", map.width(), map.height())?;
    let bytes = map.to_bytes();
    for iy in (0..map.height()).rev() {
        out.extend_from_slice(&bytes[iy * map.width()..(iy + 1) * map.width()]);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a P5 image; returns `(width, height, rows)` with rows in file order.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let data = fs::read(path)?;
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < data.len() && (data[pos].is_ascii_whitespace() || data[pos] == b'#') {
            if data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("pgm", "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if tokens[0] != "P5" {
        return Err(Error::format("pgm", format!("magic {} is not P5", tokens[0])));
    }
    let parse = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::format("pgm", format!("bad header field '{t}'")))
    };
    let (w, h, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if maxval != 255 {
        return Err(Error::format("pgm", format!("maxval {maxval} is not 255")));
    }
    let raster = data.get(pos..pos + w * h).ok_or_else(|| {
        Error::format("pgm", format!("raster shorter than {w}x{h}"))
    })?;
    Ok((w, h, raster.to_vec()))
}

fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

/// Saves `<name>.pgm` and `<name>.json`.
pub fn save_world(map: &HeightMap, track: &ActorTrack, pgm: &Path) -> Result<()> {
    write_pgm(map, pgm)?;
    let sidecar = WorldSidecar {
        resolution: map.resolution(),
        max_obstacle_height: map.max_obstacle_height(),
        track: track.clone(),
    };
    fs::write(sidecar_path(pgm), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

/// Loads a map saved by [`save_world`]. Heights come back on the 8-bit grid.
pub fn load_world(pgm: &Path) -> Result<(HeightMap, ActorTrack)> {
    let (w, h, rows) = read_pgm(pgm)?;
    let sidecar: WorldSidecar = serde_json::from_slice(&fs::read(sidecar_path(pgm))?)?;
    let mut cells = vec![0.0; w * h];
    for (file_row, chunk) in rows.chunks(w).enumerate() {
        let iy = h - 1 - file_row;
        for (ix, &b) in chunk.iter().enumerate() {
            cells[iy * w + ix] = b as f64 / 255.0 * sidecar.max_obstacle_height;
        }
    }
    let map = HeightMap::from_cells(w, h, sidecar.resolution, sidecar.max_obstacle_height, cells)?;
    sidecar.track.validate_on(&map)?;
    Ok((map, sidecar.track))
}
