//! GIS input parsing and the local tangent-plane projection.
//!
//! Footprints come in as a GeoJSON FeatureCollection, elevation as an ESRI
//! ASCII grid, weather as a plain CSV. All parsers are pure functions on
//! immutable inputs. Downstream geometry works in local meters east/north of
//! the region centroid; see [`LocalFrame`].

mod elevation;
mod footprints;
mod tiles;
mod weather;

pub use elevation::{parse_elevation, sample_elevation, ElevationGrid};
pub use footprints::{parse_footprints, serialize_footprints, FootprintParse, GeoFootprint};
pub use tiles::{tile_extent, tiles_for_region, TileIndex, MAX_MERCATOR_LAT};
pub use weather::{parse_weather, serialize_weather, WeatherSeries};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polygon::Point2;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("GeoJSON parse error at line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("feature {index}: {msg}")]
    Feature { index: usize, msg: String },
    #[error("elevation grid: {0}")]
    Elevation(String),
    #[error("elevation grid: expected {expected} values, found {found}")]
    ElevationCount { expected: usize, found: usize },
    #[error("weather: {0}")]
    Weather(String),
    #[error("weather row {row}: {msg}")]
    WeatherRow { row: usize, msg: String },
    #[error("sample point ({x}, {y}) outside grid extent")]
    OutOfRange { x: f64, y: f64 },
    #[error("all neighbor cells are nodata at ({x}, {y})")]
    AllNodata { x: f64, y: f64 },
}

/// Axis-aligned lon/lat rectangle, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLatBbox {
    pub lon_min: f64,
    pub lat_min: f64,
    pub lon_max: f64,
    pub lat_max: f64,
}

impl LonLatBbox {
    pub fn new(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Self {
        LonLatBbox { lon_min, lat_min, lon_max, lat_max }
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.lon_min + self.lon_max), 0.5 * (self.lat_min + self.lat_max))
    }

    /// Smallest bbox covering all footprint vertices.
    pub fn around_footprints(footprints: &[GeoFootprint]) -> Option<LonLatBbox> {
        let mut b = LonLatBbox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for f in footprints {
            for &(lon, lat) in f.outer.iter().chain(f.holes.iter().flatten()) {
                b.lon_min = b.lon_min.min(lon);
                b.lat_min = b.lat_min.min(lat);
                b.lon_max = b.lon_max.max(lon);
                b.lat_max = b.lat_max.max(lat);
                any = true;
            }
        }
        any.then_some(b)
    }
}

/// Equirectangular tangent-plane projection around a reference point.
///
/// Meters east/north of (lon0, lat0): `x = (lon-lon0)·cos(lat0)·111320`,
/// `y = (lat-lat0)·110540`. Adequate for extents up to ~20 km.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub lon0: f64,
    pub lat0: f64,
}

const METERS_PER_DEG_LON_EQUATOR: f64 = 111_320.0;
const METERS_PER_DEG_LAT: f64 = 110_540.0;

impl LocalFrame {
    pub fn new(lon0: f64, lat0: f64) -> Self {
        LocalFrame { lon0, lat0 }
    }

    pub fn centered_on(bbox: &LonLatBbox) -> Self {
        let (lon0, lat0) = bbox.center();
        LocalFrame { lon0, lat0 }
    }

    pub fn project(&self, lon: f64, lat: f64) -> Point2 {
        let x = (lon - self.lon0) * self.lat0.to_radians().cos() * METERS_PER_DEG_LON_EQUATOR;
        let y = (lat - self.lat0) * METERS_PER_DEG_LAT;
        Point2::new(x, y)
    }

    pub fn unproject(&self, p: Point2) -> (f64, f64) {
        let lon = self.lon0 + p.x / (self.lat0.to_radians().cos() * METERS_PER_DEG_LON_EQUATOR);
        let lat = self.lat0 + p.y / METERS_PER_DEG_LAT;
        (lon, lat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_frame_round_trips() {
        let f = LocalFrame::new(7.75, 48.58);
        let p = f.project(7.76, 48.59);
        let (lon, lat) = f.unproject(p);
        assert!((lon - 7.76).abs() < 1e-12);
        assert!((lat - 48.59).abs() < 1e-12);
        // One degree of latitude is ~110.5 km.
        assert!((f.project(7.75, 49.58).y - 110_540.0).abs() < 1e-6);
    }
}
