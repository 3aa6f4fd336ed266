//! End-to-end orchestration with pre-/sim-/post-processing stage timing.
//!
//! Pre-processing covers everything before the time loop: ingestion, repair,
//! meshing, shading masks, view factors (Case 1) and partitioning. The
//! simulation stage fans the thermal time loop out over worker lanes per the
//! partition plan. Post-processing exports one CSV per building (a single
//! serialized sink, deliberately open/write/close per file) plus a summary
//! JSON whose bytes are independent of worker count.

mod bench;
mod config;

pub use bench::{
    bench_scaling, emit_report_csv, emit_report_json, machine_descriptor, parse_report_csv,
    parse_report_json, physical_cores, BenchReport, BenchRun, Stage,
};
pub use config::RunConfig;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{
    parse_elevation, parse_footprints, parse_weather, ElevationGrid, GeoFootprint, LocalFrame,
    LonLatBbox, TileIndex, WeatherSeries,
};
use crate::mesh::{
    build_scene, embed_buildings, terrain_mesh, BuildingModel, Scene, TileContent, TriMesh,
};
use crate::partition::{partition_case0, partition_case1, weights, PartitionPlan};
use crate::polygon::{repair, Point2, Ring};
use crate::radiation::{
    building_surfaces, shading_mask, view_factors, Bvh, ShadingMask, ViewFactorMatrix,
};
use crate::solar::SkyGrid;
use crate::thermal::{
    derive_params, simulate, ArchetypeTable, SimOptions, SimResult, ZoneDefaults, ZoneParams,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("input ({stage}): {msg}")]
    Input { stage: &'static str, msg: String },
    #[error("runtime ({stage}): {msg}")]
    Runtime { stage: &'static str, msg: String },
}

impl PipelineError {
    /// CLI exit code: 2 config, 3 input parse, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Input { .. } => 3,
            PipelineError::Runtime { .. } => 4,
        }
    }
}

fn input_err(stage: &'static str) -> impl Fn(String) -> PipelineError {
    move |msg| PipelineError::Input { stage, msg }
}

fn runtime_err(stage: &'static str) -> impl Fn(String) -> PipelineError {
    move |msg| PipelineError::Runtime { stage, msg }
}

/// Wall-clock stage breakdown, seconds with microsecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub pre_s: f64,
    pub sim_s: f64,
    pub post_s: f64,
    pub wall_s: f64,
}

fn seconds(since: Instant) -> f64 {
    (since.elapsed().as_secs_f64() * 1e6).round() / 1e6
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub timings: StageTimings,
    pub n_buildings: usize,
    pub output_bytes: u64,
    pub output_files: u64,
    pub total_heating_kwh: f64,
    pub summary_path: PathBuf,
}

/// Parsed input files plus the derived region and local frame.
pub struct Inputs {
    pub footprints: Vec<GeoFootprint>,
    pub grid: Option<ElevationGrid>,
    pub weather: WeatherSeries,
    pub region: LonLatBbox,
    pub frame: LocalFrame,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, PipelineError> {
    let fp_bytes = std::fs::read(&cfg.footprints).map_err(|e| {
        PipelineError::Config(format!("cannot read {}: {e}", cfg.footprints.display()))
    })?;
    let parsed = parse_footprints(&fp_bytes).map_err(|e| input_err("footprints")(e.to_string()))?;
    for w in &parsed.warnings {
        log::warn!("footprints: {w}");
    }
    let weather_text = std::fs::read_to_string(&cfg.weather).map_err(|e| {
        PipelineError::Config(format!("cannot read {}: {e}", cfg.weather.display()))
    })?;
    let weather = parse_weather(&weather_text).map_err(|e| input_err("weather")(e.to_string()))?;
    let grid = match &cfg.elevation {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                PipelineError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            Some(parse_elevation(&text).map_err(|e| input_err("elevation")(e.to_string()))?)
        }
        None => None,
    };
    let region = cfg
        .region
        .or_else(|| LonLatBbox::around_footprints(&parsed.footprints))
        .ok_or_else(|| input_err("footprints")("no footprints and no region given".into()))?;
    let frame = LocalFrame::centered_on(&region);
    Ok(Inputs { footprints: parsed.footprints, grid, weather, region, frame })
}

/// Region, tiling, repair, cross-tile union, meshing and (optionally) slope
/// embedding. Returns the scene and the terrain mesh when elevation is given.
pub fn reconstruct(
    cfg: &RunConfig,
    inputs: &Inputs,
) -> Result<(Scene, Option<TriMesh>), PipelineError> {
    let frame = inputs.frame;
    let mut models: Vec<BuildingModel> = Vec::with_capacity(inputs.footprints.len());
    let mut skipped = 0usize;
    for fp in &inputs.footprints {
        let mut rings = Vec::with_capacity(1 + fp.holes.len());
        let to_ring = |r: &[(f64, f64)]| {
            Ring::new(r.iter().map(|&(lon, lat)| frame.project(lon, lat)).collect())
        };
        rings.push(to_ring(&fp.outer));
        rings.extend(fp.holes.iter().map(|h| to_ring(h)));
        match repair(&rings) {
            Ok(footprint) => models.push(BuildingModel {
                id: fp.id.clone(),
                footprint,
                base_z: 0.0,
                height_m: fp.height_m.unwrap_or(9.0),
                lod: cfg.lod,
            }),
            Err(e) => {
                log::warn!("footprint {} skipped: {e}", fp.id);
                skipped += 1;
            }
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} footprints skipped during repair");
    }

    // Distribute buildings over the region's tiles (duplicated across every
    // tile their bbox touches, as a tiled fetch would deliver them).
    let tiles = crate::geo::tiles_for_region(&inputs.region, cfg.zoom);
    let mut contents: Vec<TileContent> = Vec::with_capacity(tiles.len());
    let mut assigned = vec![false; models.len()];
    for tile in tiles {
        let ext = crate::geo::tile_extent(tile);
        let lo = frame.project(ext.lon_min, ext.lat_min);
        let hi = frame.project(ext.lon_max, ext.lat_max);
        let buildings: Vec<BuildingModel> = models
            .iter()
            .enumerate()
            .filter(|(i, m)| {
                let (blo, bhi) = m.footprint.bbox();
                let hit = blo.x <= hi.x && bhi.x >= lo.x && blo.y <= hi.y && bhi.y >= lo.y;
                if hit {
                    assigned[*i] = true;
                }
                hit
            })
            .map(|(_, m)| m.clone())
            .collect();
        if !buildings.is_empty() {
            contents.push(TileContent { tile, buildings });
        }
    }
    let dropped = assigned.iter().filter(|&&a| !a).count();
    if dropped > 0 {
        log::warn!("{dropped} buildings outside the region were dropped");
    }
    if contents.is_empty() {
        return Err(runtime_err("pre-proc")("no buildings inside the region".into()));
    }

    let scene = build_scene(&contents).map_err(|e| runtime_err("pre-proc")(e.to_string()))?;

    let Some(grid) = &inputs.grid else {
        return Ok((scene, None));
    };
    let lo = frame.project(inputs.region.lon_min, inputs.region.lat_min);
    let hi = frame.project(inputs.region.lon_max, inputs.region.lat_max);
    let terrain = terrain_mesh(grid, (Point2::new(lo.x, lo.y), Point2::new(hi.x, hi.y)))
        .map_err(|e| runtime_err("pre-proc")(e.to_string()))?;
    let embedded = embed_buildings(&terrain, &scene.buildings)
        .map_err(|e| runtime_err("pre-proc")(e.to_string()))?;
    let mut scene = build_scene(&[TileContent {
        tile: TileIndex::new(0, 0, 0),
        buildings: embedded,
    }])
    .map_err(|e| runtime_err("pre-proc")(e.to_string()))?;
    scene.append_mesh(&terrain);
    Ok((scene, Some(terrain)))
}

/// Shading masks for every exterior face of every building, parallel over
/// faces; deterministic by the per-(face, bin) seeding.
pub fn compute_masks(
    cfg: &RunConfig,
    scene: &Scene,
) -> Result<BTreeMap<String, ShadingMask>, PipelineError> {
    use rayon::prelude::*;
    let bvh = Bvh::build(&scene.mesh);
    let grid = SkyGrid::new(cfg.sky_az, cfg.sky_alt);
    let face_ids: Vec<String> = scene
        .building_ids()
        .flat_map(|id| scene.exterior_faces(id).map(|f| f.id.clone()))
        .collect();
    let masks: Result<Vec<ShadingMask>, PipelineError> = face_ids
        .par_iter()
        .map(|fid| {
            shading_mask(scene, &bvh, fid, grid, cfg.mask_samples, cfg.seed)
                .map_err(|e| runtime_err("pre-proc")(e.to_string()))
        })
        .collect();
    Ok(masks?
        .into_iter()
        .map(|m| (m.face_id.clone(), m))
        .collect())
}

/// One radiative surface per building envelope.
pub fn compute_view_factors(
    cfg: &RunConfig,
    scene: &Scene,
) -> Result<ViewFactorMatrix, PipelineError> {
    let bvh = Bvh::build(&scene.mesh);
    let surfaces = building_surfaces(scene);
    view_factors(&scene.mesh, &bvh, &surfaces, cfg.vf_rays, cfg.seed)
        .map_err(|e| runtime_err("pre-proc")(e.to_string()))
}

pub fn load_archetypes(cfg: &RunConfig) -> Result<ArchetypeTable, PipelineError> {
    match &cfg.archetypes_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                PipelineError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            ArchetypeTable::from_csv(&text).map_err(|e| input_err("archetypes")(e.to_string()))
        }
        None => Ok(ArchetypeTable::builtin()),
    }
}

pub fn zone_params_for(
    cfg: &RunConfig,
    scene: &Scene,
    table: &ArchetypeTable,
) -> Result<BTreeMap<String, ZoneParams>, PipelineError> {
    let defaults = ZoneDefaults { setpoint_c: cfg.setpoint_c, max_heater_w: cfg.max_heater_w };
    scene
        .building_ids()
        .map(|id| {
            derive_params(scene, id, table, &cfg.archetype, &defaults)
                .map(|p| (id.to_string(), p))
                .map_err(|e| runtime_err("pre-proc")(e.to_string()))
        })
        .collect()
}

pub fn make_plan(cfg: &RunConfig, scene: &Scene, terrain: Option<&TriMesh>) -> PartitionPlan {
    let w = weights(scene);
    let plan = partition_case0(&w, cfg.n_workers);
    match (cfg.partition_case, terrain) {
        (1, Some(t)) => partition_case1(&plan, scene, t),
        _ => plan,
    }
}

fn worker_lanes(plan: &PartitionPlan, scene: &Scene) -> Vec<Vec<usize>> {
    let mut lanes = vec![Vec::new(); plan.n_parts];
    for (idx, id) in scene.building_ids().enumerate() {
        lanes[plan.assignment[id]].push(idx);
    }
    lanes
}

/// Weather slice honoring `period_steps`, plus the substep count for `dt_s`.
fn sim_weather(cfg: &RunConfig, weather: &WeatherSeries) -> Result<(WeatherSeries, usize), PipelineError> {
    let mut w = weather.clone();
    if let Some(cap) = cfg.period_steps {
        if cap < w.len() {
            w.timestamps.truncate(cap);
            w.t_out.truncate(cap);
            w.dni.truncate(cap);
            w.dhi.truncate(cap);
        }
    }
    if w.len() < 2 {
        return Err(input_err("weather")("need at least 2 weather steps".into()));
    }
    let step = w.step_seconds().expect("length checked") as f64;
    let substeps = match cfg.dt_s {
        Some(dt) if dt < step => (step / dt).ceil() as usize,
        _ => 1,
    };
    Ok((w, substeps))
}

/// Full run: reconstruct, radiate, partition, simulate, export, with stage
/// timings measured around each boundary. Partial outputs are removed on
/// error.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    let wall_start = Instant::now();
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        PipelineError::Config(format!("cannot create {}: {e}", cfg.out_dir.display()))
    })?;

    // Pre-processing: everything before the time loop.
    let pre_start = Instant::now();
    let inputs = load_inputs(cfg)?;
    let (scene, terrain) = reconstruct(cfg, &inputs)?;
    let masks = compute_masks(cfg, &scene)?;
    let vf = if cfg.partition_case == 1 {
        Some(compute_view_factors(cfg, &scene)?)
    } else {
        None
    };
    let plan = make_plan(cfg, &scene, terrain.as_ref());
    let table = load_archetypes(cfg)?;
    let params = zone_params_for(cfg, &scene, &table)?;
    let (weather, substeps) = sim_weather(cfg, &inputs.weather)?;
    let pre_s = seconds(pre_start);

    // Simulation: the time loop, fanned out over worker lanes.
    let sim_start = Instant::now();
    let (lat, lon) = {
        let (lon0, lat0) = inputs.region.center();
        (lat0, lon0)
    };
    let opts = SimOptions {
        latitude: lat,
        longitude: lon,
        h_r: crate::thermal::DEFAULT_H_R,
        substeps,
        seed: cfg.seed,
        parts: Some(worker_lanes(&plan, &scene)),
    };
    let result = simulate(&scene, &params, &masks, &weather, vf.as_ref(), &opts)
        .map_err(|e| runtime_err("simulation")(e.to_string()))?;
    let sim_s = seconds(sim_start);

    // Post-processing: per-building files on one serialized sink.
    let post_start = Instant::now();
    let mut written: Vec<PathBuf> = Vec::new();
    let post = write_outputs(cfg, &weather, &result, &mut written);
    match post {
        Ok((output_bytes, output_files, summary_path)) => {
            let post_s = seconds(post_start);
            let wall_s = seconds(wall_start);
            Ok(PipelineOutput {
                timings: StageTimings { pre_s, sim_s, post_s, wall_s },
                n_buildings: result.building_ids.len(),
                output_bytes,
                output_files,
                total_heating_kwh: result.total_kwh(),
                summary_path,
            })
        }
        Err(e) => {
            for path in written {
                let _ = std::fs::remove_file(path);
            }
            Err(e)
        }
    }
}

fn write_outputs(
    cfg: &RunConfig,
    weather: &WeatherSeries,
    result: &SimResult,
    written: &mut Vec<PathBuf>,
) -> Result<(u64, u64, PathBuf), PipelineError> {
    let io_err = runtime_err("post-proc");
    let mut bytes = 0u64;
    let mut files = 0u64;

    if cfg.aggregate_output {
        // Mitigation path: one concatenated file instead of one per building.
        let path = cfg.out_dir.join("results.csv");
        let mut body = String::from("building,time,t_in,q_heat\n");
        for (b, id) in result.building_ids.iter().enumerate() {
            for k in 0..weather.len() {
                body.push_str(&format!(
                    "{id},{},{:.6},{:.6}\n",
                    weather.timestamps[k].format("%Y-%m-%dT%H:%M:%SZ"),
                    result.t_in[b][k],
                    result.q_heat[b][k],
                ));
            }
        }
        std::fs::write(&path, &body).map_err(|e| io_err(e.to_string()))?;
        written.push(path);
        bytes += body.len() as u64;
        files += 1;
    } else {
        // One open/write/close per building, sequential on this thread.
        for (b, id) in result.building_ids.iter().enumerate() {
            let path = cfg.out_dir.join(format!("b{b:04}_{}.csv", safe_name(id)));
            let mut f = std::fs::File::create(&path).map_err(|e| io_err(e.to_string()))?;
            written.push(path);
            let mut body = String::from("time,t_in,q_heat\n");
            for k in 0..weather.len() {
                body.push_str(&format!(
                    "{},{:.6},{:.6}\n",
                    weather.timestamps[k].format("%Y-%m-%dT%H:%M:%SZ"),
                    result.t_in[b][k],
                    result.q_heat[b][k],
                ));
            }
            f.write_all(body.as_bytes()).map_err(|e| io_err(e.to_string()))?;
            drop(f);
            bytes += body.len() as u64;
            files += 1;
        }
    }

    let summary = summary_json(result);
    let path = cfg.out_dir.join("summary.json");
    std::fs::write(&path, &summary).map_err(|e| io_err(e.to_string()))?;
    written.push(path.clone());
    bytes += summary.len() as u64;
    files += 1;
    Ok((bytes, files, path))
}

/// Scene-level summary; excludes timings so bytes are reproducible.
fn summary_json(result: &SimResult) -> String {
    let mut buildings = serde_json::Map::new();
    for (b, id) in result.building_ids.iter().enumerate() {
        let peak = result.q_heat[b].iter().copied().fold(0.0, f64::max);
        let min_t = result.t_in[b].iter().copied().fold(f64::INFINITY, f64::min);
        buildings.insert(
            id.clone(),
            serde_json::json!({
                "heating_kwh": result.energy_kwh[b],
                "peak_heat_w": peak,
                "min_t_in_c": min_t,
            }),
        );
    }
    let doc = serde_json::json!({
        "schema_version": 1,
        "model_variant": result.model_variant,
        "seed": result.seed,
        "dt_s": result.dt_s,
        "n_buildings": result.building_ids.len(),
        "total_heating_kwh": result.total_kwh(),
        "buildings": buildings,
    });
    serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
}

fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '-' })
        .collect()
}
