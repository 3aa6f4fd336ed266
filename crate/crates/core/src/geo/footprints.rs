//! GeoJSON footprint ingestion.
//!
//! Recognized subset: a FeatureCollection of Polygon/MultiPolygon features
//! with properties `height` (meters, number), `building:levels` (number) and
//! `id`. Missing heights are derived as `levels × 3.0 m`, falling back to
//! 9.0 m. Features that cannot yield a valid footprint are skipped and
//! recorded in the warning list rather than failing the whole document.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::GeoError;

const METERS_PER_LEVEL: f64 = 3.0;
const DEFAULT_HEIGHT_M: f64 = 9.0;

/// A raw GIS building unit: 2D polygon-with-holes plus height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoFootprint {
    pub id: String,
    /// Outer ring, (lon, lat) degrees.
    pub outer: Vec<(f64, f64)>,
    pub holes: Vec<Vec<(f64, f64)>>,
    /// Always populated by the parser (derived when absent in the source).
    pub height_m: Option<f64>,
    pub levels: Option<u32>,
}

#[derive(Debug, Default)]
pub struct FootprintParse {
    pub footprints: Vec<GeoFootprint>,
    pub warnings: Vec<String>,
}

/// Parse a GeoJSON FeatureCollection into footprints.
pub fn parse_footprints(bytes: &[u8]) -> Result<FootprintParse, GeoError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| GeoError::Json {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let root = doc
        .as_object()
        .ok_or_else(|| err_doc("document root is not an object"))?;
    match root.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => {}
        other => {
            return Err(err_doc(&format!(
                "expected type \"FeatureCollection\", found {other:?}"
            )))
        }
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| err_doc("missing \"features\" array"))?;

    let mut out = FootprintParse::default();
    for (index, feature) in features.iter().enumerate() {
        match parse_feature(index, feature) {
            Ok(mut fps) => out.footprints.append(&mut fps),
            Err(FeatureSkip::Warn(msg)) => {
                log::warn!("feature {index} skipped: {msg}");
                out.warnings.push(format!("feature {index}: {msg}"));
            }
            Err(FeatureSkip::Fatal(e)) => return Err(e),
        }
    }
    Ok(out)
}

fn err_doc(msg: &str) -> GeoError {
    GeoError::Json { line: 1, column: 1, msg: msg.to_string() }
}

enum FeatureSkip {
    /// Feature dropped, document still valid.
    Warn(String),
    /// Structural problem: reject the document.
    Fatal(GeoError),
}

fn fatal(index: usize, msg: impl Into<String>) -> FeatureSkip {
    FeatureSkip::Fatal(GeoError::Feature { index, msg: msg.into() })
}

fn parse_feature(index: usize, feature: &Value) -> Result<Vec<GeoFootprint>, FeatureSkip> {
    let obj = feature
        .as_object()
        .ok_or_else(|| fatal(index, "feature is not an object"))?;
    if obj.get("type").and_then(Value::as_str) != Some("Feature") {
        return Err(fatal(index, "missing \"type\": \"Feature\""));
    }
    let geometry = obj
        .get("geometry")
        .and_then(Value::as_object)
        .ok_or_else(|| fatal(index, "missing geometry object"))?;
    let props = obj.get("properties").and_then(Value::as_object);

    let id = props
        .and_then(|p| p.get("id"))
        .map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .unwrap_or_else(|| format!("feature-{index}"));

    let height = props.and_then(|p| p.get("height")).and_then(Value::as_f64);
    let levels = props
        .and_then(|p| p.get("building:levels"))
        .and_then(Value::as_f64);
    if height.is_some() && levels.is_some() {
        // OSM data may carry both attributes; `height` wins.
        log::warn!("feature {index} ({id}): both height and building:levels set; using height");
    }
    let height_m = match (height, levels) {
        (Some(h), _) => h,
        (None, Some(l)) => l * METERS_PER_LEVEL,
        (None, None) => DEFAULT_HEIGHT_M,
    };
    if !(height_m > 0.0) || !height_m.is_finite() {
        return Err(FeatureSkip::Warn(format!("non-positive height {height_m}")));
    }
    let levels = levels.map(|l| l.max(0.0).round() as u32);

    let gtype = geometry
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| fatal(index, "geometry missing type"))?;
    let coords = geometry
        .get("coordinates")
        .ok_or_else(|| fatal(index, "geometry missing coordinates"))?;

    let polygons: Vec<&Value> = match gtype {
        "Polygon" => vec![coords],
        "MultiPolygon" => coords
            .as_array()
            .ok_or_else(|| fatal(index, "MultiPolygon coordinates are not an array"))?
            .iter()
            .collect(),
        other => return Err(FeatureSkip::Warn(format!("unsupported geometry type {other}"))),
    };

    let multi = polygons.len() > 1;
    let mut out = Vec::new();
    for (part, poly) in polygons.iter().enumerate() {
        let rings = poly
            .as_array()
            .ok_or_else(|| fatal(index, "polygon coordinates are not an array"))?;
        if rings.is_empty() {
            return Err(FeatureSkip::Warn("polygon has no rings".into()));
        }
        let mut parsed: Vec<Vec<(f64, f64)>> = Vec::with_capacity(rings.len());
        for ring in rings {
            parsed.push(parse_ring(index, ring)?);
        }
        let outer = parsed.remove(0);
        if count_distinct(&outer) < 3 {
            return Err(FeatureSkip::Warn("outer ring has fewer than 3 distinct vertices".into()));
        }
        parsed.retain(|h| count_distinct(h) >= 3);
        let part_id = if multi { format!("{id}#{part}") } else { id.clone() };
        out.push(GeoFootprint {
            id: part_id,
            outer,
            holes: parsed,
            height_m: Some(height_m),
            levels,
        });
    }
    Ok(out)
}

fn parse_ring(index: usize, ring: &Value) -> Result<Vec<(f64, f64)>, FeatureSkip> {
    let positions = ring
        .as_array()
        .ok_or_else(|| fatal(index, "ring is not an array"))?;
    let mut out = Vec::with_capacity(positions.len());
    for pos in positions {
        let xy = pos
            .as_array()
            .ok_or_else(|| fatal(index, "position is not an array"))?;
        if xy.len() < 2 {
            return Err(fatal(index, "position has fewer than 2 coordinates"));
        }
        let lon = xy[0]
            .as_f64()
            .ok_or_else(|| fatal(index, "longitude is not a number"))?;
        let lat = xy[1]
            .as_f64()
            .ok_or_else(|| fatal(index, "latitude is not a number"))?;
        if lat.abs() > 90.0 {
            return Err(FeatureSkip::Warn(format!("latitude {lat} out of range")));
        }
        out.push((wrap_lon(lon), lat));
    }
    // Drop the explicit closing vertex GeoJSON rings carry.
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    Ok(out)
}

fn wrap_lon(lon: f64) -> f64 {
    let mut l = (lon + 180.0) % 360.0;
    if l < 0.0 {
        l += 360.0;
    }
    l - 180.0
}

fn count_distinct(ring: &[(f64, f64)]) -> usize {
    let mut seen: Vec<(f64, f64)> = Vec::with_capacity(ring.len());
    for &v in ring {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen.len()
}

/// Serialize footprints back to the GeoJSON subset accepted by
/// [`parse_footprints`]. Round-trips field-for-field.
pub fn serialize_footprints(footprints: &[GeoFootprint]) -> String {
    let features: Vec<Value> = footprints
        .iter()
        .map(|f| {
            let mut rings: Vec<Value> = Vec::with_capacity(1 + f.holes.len());
            rings.push(ring_json(&f.outer));
            rings.extend(f.holes.iter().map(|h| ring_json(h)));
            let mut props = serde_json::Map::new();
            props.insert("id".into(), Value::String(f.id.clone()));
            if let Some(h) = f.height_m {
                props.insert("height".into(), serde_json::json!(h));
            }
            if let Some(l) = f.levels {
                props.insert("building:levels".into(), serde_json::json!(l));
            }
            serde_json::json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": rings },
                "properties": props,
            })
        })
        .collect();
    let doc = serde_json::json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string_pretty(&doc).expect("json serialization cannot fail")
}

fn ring_json(ring: &[(f64, f64)]) -> Value {
    let mut positions: Vec<Value> = ring
        .iter()
        .map(|&(lon, lat)| serde_json::json!([lon, lat]))
        .collect();
    if let Some(first) = positions.first().cloned() {
        positions.push(first); // GeoJSON rings are explicitly closed
    }
    Value::Array(positions)
}
