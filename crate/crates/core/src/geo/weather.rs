//! Weather CSV ingestion: `timestamp,t_out,dni,dhi`.

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::GeoError;

/// Uniform-step weather series. `dni`/`dhi` are direct normal and diffuse
/// horizontal irradiance in W/m²; `t_out` is the outdoor air temperature in °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    pub timestamps: Vec<DateTime<Utc>>,
    pub t_out: Vec<f64>,
    pub dni: Vec<f64>,
    pub dhi: Vec<f64>,
}

impl WeatherSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Uniform step in seconds; `None` for a single-row series.
    pub fn step_seconds(&self) -> Option<i64> {
        (self.timestamps.len() >= 2)
            .then(|| (self.timestamps[1] - self.timestamps[0]).num_seconds())
    }
}

const HEADER: &str = "timestamp,t_out,dni,dhi";

/// Parse and validate a weather CSV. Rows are numbered from 1 (first data row).
pub fn parse_weather(text: &str) -> Result<WeatherSeries, GeoError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| GeoError::Weather("empty document".into()))?;
    if header.trim() != HEADER {
        return Err(GeoError::Weather(format!(
            "expected header {HEADER:?}, found {:?}",
            header.trim()
        )));
    }
    let mut series = WeatherSeries {
        timestamps: Vec::new(),
        t_out: Vec::new(),
        dni: Vec::new(),
        dhi: Vec::new(),
    };
    let mut step: Option<i64> = None;
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(GeoError::WeatherRow {
                row,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let ts = parse_timestamp(fields[0])
            .ok_or_else(|| GeoError::WeatherRow { row, msg: format!("invalid timestamp {:?}", fields[0]) })?;
        let t_out: f64 = parse_field(fields[1], "t_out", row)?;
        let dni: f64 = parse_field(fields[2], "dni", row)?;
        let dhi: f64 = parse_field(fields[3], "dhi", row)?;
        if dni < 0.0 || dhi < 0.0 {
            return Err(GeoError::WeatherRow { row, msg: "negative irradiance".into() });
        }
        if let Some(prev) = series.timestamps.last() {
            let dt = (ts - *prev).num_seconds();
            if dt <= 0 {
                return Err(GeoError::WeatherRow { row, msg: "non-increasing timestamp".into() });
            }
            match step {
                None => step = Some(dt),
                Some(s) if s != dt => {
                    return Err(GeoError::WeatherRow {
                        row,
                        msg: format!("non-uniform time step: {dt} s after {s} s"),
                    })
                }
                _ => {}
            }
        }
        series.timestamps.push(ts);
        series.t_out.push(t_out);
        series.dni.push(dni);
        series.dhi.push(dhi);
    }
    if series.is_empty() {
        return Err(GeoError::Weather("no data rows".into()));
    }
    Ok(series)
}

fn parse_field(s: &str, what: &str, row: usize) -> Result<f64, GeoError> {
    s.parse()
        .map_err(|_| GeoError::WeatherRow { row, msg: format!("invalid {what}: {s:?}") })
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    // Naive ISO-8601 is taken as UTC.
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .ok()
        .map(|naive| naive.and_utc())
}

/// Serialize back to the CSV accepted by [`parse_weather`] (LF line endings).
pub fn serialize_weather(series: &WeatherSeries) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for i in 0..series.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            series.timestamps[i].format("%Y-%m-%dT%H:%M:%SZ"),
            series.t_out[i],
            series.dni[i],
            series.dhi[i],
        ));
    }
    out
}
