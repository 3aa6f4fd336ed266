//! Run configuration: a flat `key = value` document plus CLI overrides.

use std::path::PathBuf;

use crate::geo::LonLatBbox;
use crate::mesh::Lod;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub footprints: PathBuf,
    pub weather: PathBuf,
    /// Elevation grid in local-frame meters (origin relative to the region
    /// centroid); buildings sit at z = 0 when absent.
    pub elevation: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Defaults to the bbox of the parsed footprints.
    pub region: Option<LonLatBbox>,
    pub zoom: u8,
    pub lod: Lod,
    pub sky_az: usize,
    pub sky_alt: usize,
    pub mask_samples: usize,
    pub vf_rays: usize,
    pub n_workers: usize,
    pub partition_case: u8,
    pub seed: u64,
    pub archetype: String,
    pub archetypes_path: Option<PathBuf>,
    pub setpoint_c: f64,
    pub max_heater_w: f64,
    /// Sub-step target in seconds; weather steps are subdivided to reach it.
    pub dt_s: Option<f64>,
    /// Cap on the number of weather steps simulated.
    pub period_steps: Option<usize>,
    pub aggregate_output: bool,
}

impl RunConfig {
    pub fn defaults(footprints: PathBuf, weather: PathBuf, out_dir: PathBuf) -> RunConfig {
        RunConfig {
            footprints,
            weather,
            elevation: None,
            out_dir,
            region: None,
            zoom: 15,
            lod: Lod::Lod1,
            sky_az: 72,
            sky_alt: 10,
            mask_samples: crate::radiation::DEFAULT_MASK_SAMPLES,
            vf_rays: crate::radiation::DEFAULT_VF_RAYS,
            n_workers: 1,
            partition_case: 0,
            seed: 0,
            archetype: "old".to_string(),
            archetypes_path: None,
            setpoint_c: 20.0,
            max_heater_w: f64::INFINITY,
            dt_s: None,
            period_steps: None,
            aggregate_output: false,
        }
    }

    /// Parse a `key = value` document (`#` comments, blank lines allowed).
    pub fn from_kv(text: &str) -> Result<RunConfig, PipelineError> {
        let mut footprints: Option<PathBuf> = None;
        let mut weather: Option<PathBuf> = None;
        let mut out_dir: Option<PathBuf> = None;
        let mut pending: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PipelineError::Config(format!(
                    "line {}: expected key = value, found {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().trim_matches('"').to_string();
            match key.as_str() {
                "footprints" => footprints = Some(PathBuf::from(&value)),
                "weather" => weather = Some(PathBuf::from(&value)),
                "out" => out_dir = Some(PathBuf::from(&value)),
                _ => pending.push((key, value)),
            }
        }
        let mut cfg = RunConfig::defaults(
            footprints.ok_or_else(|| PipelineError::Config("missing key footprints".into()))?,
            weather.ok_or_else(|| PipelineError::Config("missing key weather".into()))?,
            out_dir.ok_or_else(|| PipelineError::Config("missing key out".into()))?,
        );
        for (key, value) in pending {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one key (used for both the config file and CLI overrides).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let bad = |what: &str| {
            PipelineError::Config(format!("invalid {what} value {value:?} for key {key}"))
        };
        match key {
            "footprints" => self.footprints = PathBuf::from(value),
            "weather" => self.weather = PathBuf::from(value),
            "out" => self.out_dir = PathBuf::from(value),
            "elevation" => self.elevation = Some(PathBuf::from(value)),
            "archetypes_path" => self.archetypes_path = Some(PathBuf::from(value)),
            "archetype" => self.archetype = value.to_string(),
            "region" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("region"))?;
                if parts.len() != 4 {
                    return Err(bad("region"));
                }
                self.region = Some(LonLatBbox::new(parts[0], parts[1], parts[2], parts[3]));
            }
            "zoom" => self.zoom = value.parse().map_err(|_| bad("integer"))?,
            "lod" => {
                self.lod = match value {
                    "0" => Lod::Lod0,
                    "1" => Lod::Lod1,
                    _ => return Err(bad("lod")),
                }
            }
            "sky_az" => self.sky_az = value.parse().map_err(|_| bad("integer"))?,
            "sky_alt" => self.sky_alt = value.parse().map_err(|_| bad("integer"))?,
            "mask_samples" => self.mask_samples = value.parse().map_err(|_| bad("integer"))?,
            "vf_rays" => self.vf_rays = value.parse().map_err(|_| bad("integer"))?,
            "workers" => self.n_workers = value.parse().map_err(|_| bad("integer"))?,
            "partition_case" => self.partition_case = value.parse().map_err(|_| bad("integer"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "setpoint_c" => self.setpoint_c = value.parse().map_err(|_| bad("number"))?,
            "max_heater_w" => {
                self.max_heater_w = if value == "inf" {
                    f64::INFINITY
                } else {
                    value.parse().map_err(|_| bad("number"))?
                }
            }
            "dt_s" => self.dt_s = Some(value.parse().map_err(|_| bad("number"))?),
            "period_steps" => self.period_steps = Some(value.parse().map_err(|_| bad("integer"))?),
            "aggregate_output" => {
                self.aggregate_output = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => return Err(bad("boolean")),
                }
            }
            other => {
                return Err(PipelineError::Config(format!("unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n_workers < 1 {
            return Err(PipelineError::Config("workers must be >= 1".into()));
        }
        if self.zoom > 19 {
            return Err(PipelineError::Config("zoom must be <= 19".into()));
        }
        if self.partition_case > 1 {
            return Err(PipelineError::Config(
                "partition_case must be 0 or 1".into(),
            ));
        }
        if self.sky_az < 4 || self.sky_alt < 2 {
            return Err(PipelineError::Config("sky grid must be at least 4x2".into()));
        }
        if self.mask_samples == 0 || self.vf_rays == 0 {
            return Err(PipelineError::Config("sampling counts must be positive".into()));
        }
        if let Some(dt) = self.dt_s {
            if !(dt > 0.0) {
                return Err(PipelineError::Config("dt_s must be positive".into()));
            }
        }
        Ok(())
    }
}
