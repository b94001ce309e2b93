use super::HeightMap;

/// Side of the square local map, in cells.
pub const CROP_SIZE: usize = 24;
/// Number of cells in the local map.
pub const CROP_CELLS: usize = CROP_SIZE * CROP_SIZE;

/// Heading-aligned 8-bit height window around the actor. Row 0 lies ahead of
/// the actor, column 0 on its left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMap(pub [u8; CROP_CELLS]);

impl LocalMap {
    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.0[row * CROP_SIZE + col]
    }
}

/// Samples the 24x24 window centered on `center`, rotated so `heading`
/// points to row 0. Sample points sit at half-cell offsets
/// (`+-0.5 .. +-11.5` cells) so an actor standing on a grid corner samples
/// cell centers. Off-map samples read 0.
pub fn crop_local_map(map: &HeightMap, center: [f64; 2], heading: f64) -> LocalMap {
    let res = map.resolution();
    let (sin, cos) = heading.sin_cos();
    let forward = [cos, sin];
    let left = [-sin, cos];
    let half = (CROP_SIZE as f64 - 1.0) / 2.0;
    let mut out = [0u8; CROP_CELLS];
    for row in 0..CROP_SIZE {
        let ahead = (half - row as f64) * res;
        for col in 0..CROP_SIZE {
            let side = (half - col as f64) * res;
            let x = center[0] + ahead * forward[0] + side * left[0];
            let y = center[1] + ahead * forward[1] + side * left[1];
            out[row * CROP_SIZE + col] = map.quantize(map.height_at(x, y));
        }
    }
    LocalMap(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    #[test]
    fn flat_world_is_all_zero() {
        let map = HeightMap::flat(48, 48, 1.0, 20.0).unwrap();
        let crop = crop_local_map(&map, [24.0, 24.0], 0.3);
        assert_eq!(crop.bytes().len(), 576);
        assert!(crop.bytes().iter().all(|&b| b == 0));
    }

    #[test]
    fn obstacle_north_heading_north_lands_in_upper_half() {
        let mut map = HeightMap::flat(48, 48, 1.0, 20.0).unwrap();
        map.raise(24, 27, 20.0);
        let crop = crop_local_map(&map, [24.0, 24.0], FRAC_PI_2);
        let hits: Vec<(usize, usize)> = (0..CROP_SIZE)
            .flat_map(|r| (0..CROP_SIZE).map(move |c| (r, c)))
            .filter(|&(r, c)| crop.at(r, c) == 255)
            .collect();
        assert_eq!(hits.len(), 1);
        let (row, col) = hits[0];
        assert!(row < CROP_SIZE / 2, "row {row} not in upper half");
        // Cell 24 is right of the actor's center line when facing north.
        assert_eq!(col, 12);
        assert_eq!(row, 8);
    }

    #[test]
    fn half_height_quantizes_to_128() {
        let mut map = HeightMap::flat(48, 48, 1.0, 20.0).unwrap();
        map.raise(30, 24, 10.0);
        let crop = crop_local_map(&map, [24.0, 24.0], 0.0);
        assert!(crop.bytes().contains(&128));
    }

    #[test]
    fn off_map_reads_zero() {
        let cells = vec![7.0; 48 * 48];
        let map = HeightMap::from_cells(48, 48, 1.0, 20.0, cells).unwrap();
        let crop = crop_local_map(&map, [1.0, 1.0], 0.0);
        // Heading east: row 0 col 0 is ahead-left, inside the map.
        assert_eq!(crop.at(0, 0), map.quantize(7.0));
        assert_eq!(crop.at(23, 23), 0);
        assert_eq!(crop.at(0, 23), 0);
        assert_eq!(crop.at(23, 0), 0);
    }
}
