//! Slippy-scheme web map tiles.

use serde::{Deserialize, Serialize};

use super::LonLatBbox;

/// Web-mercator latitude limit; inputs beyond it are clamped.
pub const MAX_MERCATOR_LAT: f64 = 85.05112877980659;

/// One tile in the slippy scheme: `0 <= x, y < 2^z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileIndex {
    pub z: u8,
    pub x: u32,
    pub y: u32,
}

impl TileIndex {
    pub fn new(z: u8, x: u32, y: u32) -> Self {
        debug_assert!(x < (1 << z) && y < (1 << z));
        TileIndex { z, x, y }
    }

    /// The four zoom-(z+1) tiles covering this tile.
    pub fn children(&self) -> [TileIndex; 4] {
        let (z, x, y) = (self.z + 1, self.x * 2, self.y * 2);
        [
            TileIndex::new(z, x, y),
            TileIndex::new(z, x + 1, y),
            TileIndex::new(z, x, y + 1),
            TileIndex::new(z, x + 1, y + 1),
        ]
    }
}

/// Fractional tile x coordinate at zoom z.
fn tile_u(lon: f64, z: u8) -> f64 {
    (lon + 180.0) / 360.0 * (1u32 << z) as f64
}

/// Fractional tile y coordinate at zoom z (0 at the north mercator limit).
fn tile_v(lat: f64, z: u8) -> f64 {
    let lat = lat.clamp(-MAX_MERCATOR_LAT, MAX_MERCATOR_LAT);
    (1.0 - lat.to_radians().tan().asinh() / std::f64::consts::PI) / 2.0 * (1u32 << z) as f64
}

/// Lon/lat extent of a tile (north edge has the smaller y index).
pub fn tile_extent(tile: TileIndex) -> LonLatBbox {
    let n = (1u32 << tile.z) as f64;
    let lon = |x: f64| x / n * 360.0 - 180.0;
    let lat = |y: f64| (std::f64::consts::PI * (1.0 - 2.0 * y / n)).sinh().atan().to_degrees();
    LonLatBbox::new(
        lon(tile.x as f64),
        lat((tile.y + 1) as f64),
        lon((tile.x + 1) as f64),
        lat(tile.y as f64),
    )
}

/// Exactly the tiles whose extent intersects `bbox`, row-major order.
///
/// Tile extents are treated as half-open on their east/south edges, so a bbox
/// edge lying exactly on a tile boundary does not pull in the next tile; this
/// makes refining a tile's own extent by one zoom level yield exactly its four
/// children. Latitudes beyond the mercator limit are clamped.
pub fn tiles_for_region(bbox: &LonLatBbox, z: u8) -> Vec<TileIndex> {
    assert!(z <= 19, "zoom {z} out of supported range 0..=19");
    assert!(
        bbox.lon_min <= bbox.lon_max && bbox.lat_min <= bbox.lat_max,
        "degenerate bbox"
    );
    let max = (1u32 << z) - 1;
    let clamp = |v: f64| (v.max(0.0) as u32).min(max);

    // Absorb float noise when a bbox edge sits exactly on a tile boundary
    // (about 1e-9 of a tile, far below any real geometry).
    const EPS: f64 = 1e-9;
    let u0 = (tile_u(bbox.lon_min, z) + EPS).floor();
    let u1 = ((tile_u(bbox.lon_max, z) - EPS).ceil() - 1.0).max(u0);
    let v0 = (tile_v(bbox.lat_max, z) + EPS).floor();
    let v1 = ((tile_v(bbox.lat_min, z) - EPS).ceil() - 1.0).max(v0);

    let (x0, x1) = (clamp(u0), clamp(u1));
    let (y0, y1) = (clamp(v0), clamp(v1));
    let mut out = Vec::with_capacity(((x1 - x0 + 1) * (y1 - y0 + 1)) as usize);
    for y in y0..=y1 {
        for x in x0..=x1 {
            out.push(TileIndex::new(z, x, y));
        }
    }
    out
}
