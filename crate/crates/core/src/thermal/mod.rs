//! Lumped-parameter building energy model.
//!
//! Each building is a 2-node RC network (air + thermal mass) advanced by an
//! unconditionally stable backward-Euler step with an ideal clamped heater.
//! Solar gains enter through shading masks, optional inter-building longwave
//! exchange through a Monte Carlo view-factor matrix with a linearized
//! radiative coefficient. The model variant name is recorded in results.

mod archetypes;
mod benchmark2d;

pub use archetypes::{
    derive_params, Archetype, ArchetypeTable, ZoneDefaults, WINDOW_WALL_FRACTION,
};
pub use benchmark2d::{
    solve_2d_benchmark, solve_segment_network, Benchmark2dConfig, Benchmark2dResult, Block2d,
    NetworkSegment,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::WeatherSeries;
use crate::mesh::{FaceTag, Scene};
use crate::radiation::{ShadingMask, ViewFactorMatrix};
use crate::solar::{face_irradiance, sun_position};

/// Model identifier recorded in results.
pub const MODEL_VARIANT: &str = "rc2-implicit";
/// Linearized longwave radiative coefficient, W/(m²·K).
pub const DEFAULT_H_R: f64 = 5.0;
/// Share of total capacitance on the air node.
const AIR_NODE_FRACTION: f64 = 0.1;
/// Share of solar gains deposited on the air node (rest goes to the mass).
const GAIN_TO_AIR_FRACTION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error("unknown archetype {0}")]
    UnknownArchetype(String),
    #[error("archetype table: {0}")]
    ArchetypeTable(String),
    #[error("unknown building {0}")]
    UnknownBuilding(String),
    #[error("missing shading mask for face {0}")]
    MissingMask(String),
    #[error("missing zone parameters for building {0}")]
    MissingParams(String),
    #[error("weather series too short for simulation")]
    WeatherTooShort,
    #[error("singular thermal system")]
    SingularSystem,
}

/// RC zone parameters. `c_total` covers both nodes; `h_em` couples them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneParams {
    pub a_env: f64,
    pub a_win: f64,
    pub u_env: f64,
    pub u_win: f64,
    pub c_total: f64,
    pub g: f64,
    pub setpoint_c: f64,
    pub max_heater_w: f64,
    pub h_inf: f64,
    pub h_em: f64,
}

impl ZoneParams {
    /// Envelope transmission conductance: opaque portion plus windows.
    pub fn h_env(&self) -> f64 {
        self.u_env * (self.a_env - self.a_win) + self.u_win * self.a_win
    }

    /// Total steady-state conductance to outdoors.
    pub fn h_total(&self) -> f64 {
        self.h_env() + self.h_inf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneState {
    pub t_in: f64,
    pub t_m: f64,
    pub q_heat: f64,
}

impl ZoneState {
    pub fn at(t: f64) -> Self {
        ZoneState { t_in: t, t_m: t, q_heat: 0.0 }
    }
}

/// One backward-Euler step of the 2-node system with an ideal clamped heater.
///
/// Air node: `C_a dT_in/dt = H_env(T_out−T_in) + H_inf(T_out−T_in) +
/// H_em(T_m−T_in) + Q_heat + gains_to_air`; mass node: `C_m dT_m/dt =
/// H_em(T_in−T_m) + gains_to_mass`. The heater holds the setpoint exactly
/// when it can, clamped to `[0, max_heater_w]`.
pub fn step_zone(
    state: &ZoneState,
    params: &ZoneParams,
    t_out: f64,
    solar_gain_w: f64,
    dt_s: f64,
) -> ZoneState {
    step_zone_with_extra(state, params, t_out, solar_gain_w, 0.0, dt_s)
}

/// As [`step_zone`] with an extra free-flux term on the air node (used for
/// inter-building radiative exchange).
pub fn step_zone_with_extra(
    state: &ZoneState,
    params: &ZoneParams,
    t_out: f64,
    solar_gain_w: f64,
    extra_air_w: f64,
    dt_s: f64,
) -> ZoneState {
    debug_assert!(dt_s > 0.0);
    let hx = params.h_total();
    let gain_air = GAIN_TO_AIR_FRACTION * solar_gain_w + extra_air_w;
    let gain_mass = (1.0 - GAIN_TO_AIR_FRACTION) * solar_gain_w;

    if params.h_em.is_infinite() {
        // Degenerate single-node limit: the nodes share one temperature.
        let c = params.c_total;
        let t0 = (AIR_NODE_FRACTION * state.t_in + (1.0 - AIR_NODE_FRACTION) * state.t_m)
            .clamp(state.t_in.min(state.t_m), state.t_in.max(state.t_m));
        let gains = gain_air + gain_mass;
        let solve = |q: f64| (c / dt_s * t0 + hx * t_out + gains + q) / (c / dt_s + hx);
        let free = solve(0.0);
        let q = if free >= params.setpoint_c {
            0.0
        } else {
            let ideal = (c / dt_s + hx) * params.setpoint_c - (c / dt_s * t0 + hx * t_out + gains);
            ideal.clamp(0.0, params.max_heater_w)
        };
        let t = solve(q);
        return ZoneState { t_in: t, t_m: t, q_heat: q };
    }

    let c_a = AIR_NODE_FRACTION * params.c_total;
    let c_m = (1.0 - AIR_NODE_FRACTION) * params.c_total;
    let h_em = params.h_em;
    // Eliminate the mass node:
    //   T_m' = (C_m/dt·T_m + gain_mass + H_em·T_in') / (C_m/dt + H_em)
    let m_den = c_m / dt_s + h_em;
    let a = c_a / dt_s + hx + h_em - h_em * h_em / m_den;
    let b = |q: f64| {
        c_a / dt_s * state.t_in
            + hx * t_out
            + gain_air
            + q
            + h_em * (c_m / dt_s * state.t_m + gain_mass) / m_den
    };
    let free = b(0.0) / a;
    let q = if free >= params.setpoint_c {
        0.0
    } else {
        (a * params.setpoint_c - b(0.0)).clamp(0.0, params.max_heater_w)
    };
    let t_in = b(q) / a;
    let t_m = (c_m / dt_s * state.t_m + gain_mass + h_em * t_in) / m_den;
    ZoneState { t_in, t_m, q_heat: q }
}

/// Inter-building radiative exchange into building `i`, W, from the previous
/// step's air temperatures. Conductances are symmetrized so `Q_ij = -Q_ji`
/// exactly despite Monte Carlo noise in the view factors.
pub(crate) fn radiative_exchange(vf: &ViewFactorMatrix, temps: &[f64], i: usize, h_r: f64) -> f64 {
    let n = vf.n();
    let mut q = 0.0;
    for j in 0..n {
        if j == i {
            continue;
        }
        let k = h_r * 0.5 * (vf.areas[i] * vf.f(i, j) + vf.areas[j] * vf.f(j, i));
        q += k * (temps[j] - temps[i]);
    }
    q
}

/// Simulation inputs beyond the scene: weather location and model knobs.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub latitude: f64,
    pub longitude: f64,
    pub h_r: f64,
    /// Subdivision of each weather step (inputs held constant within).
    pub substeps: usize,
    pub seed: u64,
    /// Worker lanes: building indices per part. `None` runs one lane.
    pub parts: Option<Vec<Vec<usize>>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            latitude: 48.58,
            longitude: 7.75,
            h_r: DEFAULT_H_R,
            substeps: 1,
            seed: 0,
            parts: None,
        }
    }
}

/// Per-run results: temperature and heater series per building plus energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub building_ids: Vec<String>,
    /// Indexed `[building][step]`, aligned with the weather series.
    pub t_in: Vec<Vec<f64>>,
    pub q_heat: Vec<Vec<f64>>,
    pub energy_kwh: Vec<f64>,
    pub dt_s: f64,
    pub model_variant: String,
    pub seed: u64,
}

impl SimResult {
    pub fn total_kwh(&self) -> f64 {
        self.energy_kwh.iter().sum()
    }

    pub fn building_index(&self, id: &str) -> Option<usize> {
        self.building_ids.iter().position(|b| b == id)
    }
}

/// Precomputed per-face solar data for one building.
struct FaceSolar {
    normal: [f64; 3],
    area: f64,
    sky_view: f64,
    window_share: f64,
    mask_index: usize,
}

struct BuildingSim {
    params: ZoneParams,
    faces: Vec<FaceSolar>,
}

/// District simulation over the weather series.
///
/// Buildings advance independently when no view-factor matrix is given; with
/// one, exchange terms use the previous step's temperatures (Jacobi), so
/// results are identical for any worker partition.
pub fn simulate(
    scene: &Scene,
    params: &BTreeMap<String, ZoneParams>,
    masks: &BTreeMap<String, ShadingMask>,
    weather: &WeatherSeries,
    vf: Option<&ViewFactorMatrix>,
    opts: &SimOptions,
) -> Result<SimResult, ThermalError> {
    if weather.len() < 2 {
        return Err(ThermalError::WeatherTooShort);
    }
    let dt_weather = weather.step_seconds().expect("length checked") as f64;
    let substeps = opts.substeps.max(1);
    let dt = dt_weather / substeps as f64;

    let building_ids: Vec<String> = scene.building_ids().map(str::to_string).collect();
    let mut sims: Vec<BuildingSim> = Vec::with_capacity(building_ids.len());
    let mut mask_list: Vec<&ShadingMask> = Vec::new();
    for id in &building_ids {
        let p = params
            .get(id)
            .ok_or_else(|| ThermalError::MissingParams(id.clone()))?;
        let mut faces = Vec::new();
        for face in scene.exterior_faces(id) {
            let mask = masks
                .get(&face.id)
                .ok_or_else(|| ThermalError::MissingMask(face.id.clone()))?;
            let mask_index = mask_list.len();
            mask_list.push(mask);
            faces.push(FaceSolar {
                normal: face.normal,
                area: face.area,
                sky_view: mask.sky_view(face.normal),
                window_share: match face.tag {
                    FaceTag::Wall => WINDOW_WALL_FRACTION,
                    _ => 0.0,
                },
                mask_index,
            });
        }
        sims.push(BuildingSim { params: *p, faces });
    }

    // Map scene buildings into the view-factor matrix once.
    let vf_index: Option<Vec<usize>> = vf.map(|m| {
        building_ids
            .iter()
            .map(|id| {
                m.ids
                    .iter()
                    .position(|v| v == id)
                    .expect("view-factor matrix covers every building")
            })
            .collect()
    });

    let n = building_ids.len();
    let steps = weather.len();
    // Per-step solar gains are independent of zone state; precompute them.
    let suns: Vec<_> = weather
        .timestamps
        .iter()
        .map(|&t| sun_position(opts.latitude, opts.longitude, t))
        .collect();
    let gains: Vec<Vec<f64>> = (0..n)
        .map(|b| {
            (0..steps)
                .map(|k| {
                    let sun = suns[k];
                    sims[b]
                        .faces
                        .iter()
                        .map(|f| {
                            let blocked =
                                mask_list[f.mask_index].lookup(sun).unwrap_or(1.0);
                            let irr = face_irradiance(
                                f.normal,
                                sun,
                                weather.dni[k],
                                weather.dhi[k],
                                blocked,
                                f.sky_view,
                            );
                            irr * f.area * f.window_share * sims[b].params.g
                        })
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut t_in = vec![vec![0.0; steps]; n];
    let mut q_heat = vec![vec![0.0; steps]; n];
    let mut states: Vec<ZoneState> =
        sims.iter().map(|s| ZoneState::at(s.params.setpoint_c)).collect();

    let parts: Vec<Vec<usize>> = match &opts.parts {
        Some(p) => p.clone(),
        None => vec![(0..n).collect()],
    };

    match (vf, vf_index) {
        (Some(vf), Some(vfmap)) => {
            // Jacobi-coupled: per-step fan-out with a join at each step.
            for k in 0..steps {
                let prev_temps: Vec<f64> = {
                    let mut t = vec![0.0; vf.n()];
                    for (b, &vi) in vfmap.iter().enumerate() {
                        t[vi] = states[b].t_in;
                    }
                    t
                };
                let new_states: Vec<(usize, ZoneState)> = std::thread::scope(|scope| {
                    let handles: Vec<_> = parts
                        .iter()
                        .map(|part| {
                            let states = &states;
                            let sims = &sims;
                            let gains = &gains;
                            let prev = &prev_temps;
                            let vfmap = &vfmap;
                            scope.spawn(move || {
                                part.iter()
                                    .map(|&b| {
                                        let q_rad = radiative_exchange(
                                            vf,
                                            prev,
                                            vfmap[b],
                                            opts.h_r,
                                        );
                                        let mut s = states[b];
                                        for _ in 0..substeps {
                                            s = step_zone_with_extra(
                                                &s,
                                                &sims[b].params,
                                                weather.t_out[k],
                                                gains[b][k],
                                                q_rad,
                                                dt,
                                            );
                                        }
                                        (b, s)
                                    })
                                    .collect::<Vec<_>>()
                            })
                        })
                        .collect();
                    handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
                });
                for (b, s) in new_states {
                    states[b] = s;
                    t_in[b][k] = s.t_in;
                    q_heat[b][k] = s.q_heat;
                }
            }
        }
        _ => {
            // Uncoupled: each lane advances its buildings through all steps.
            let results: Vec<(usize, Vec<f64>, Vec<f64>)> = std::thread::scope(|scope| {
                let handles: Vec<_> = parts
                    .iter()
                    .map(|part| {
                        let sims = &sims;
                        let gains = &gains;
                        let states = &states;
                        scope.spawn(move || {
                            part.iter()
                                .map(|&b| {
                                    let mut s = states[b];
                                    let mut ts = vec![0.0; steps];
                                    let mut qs = vec![0.0; steps];
                                    for k in 0..steps {
                                        for _ in 0..substeps {
                                            s = step_zone(
                                                &s,
                                                &sims[b].params,
                                                weather.t_out[k],
                                                gains[b][k],
                                                dt,
                                            );
                                        }
                                        ts[k] = s.t_in;
                                        qs[k] = s.q_heat;
                                    }
                                    (b, ts, qs)
                                })
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
            });
            for (b, ts, qs) in results {
                t_in[b] = ts;
                q_heat[b] = qs;
            }
        }
    }

    let energy_kwh: Vec<f64> = q_heat
        .iter()
        .map(|qs| qs.iter().sum::<f64>() * dt_weather / 3.6e6)
        .collect();
    Ok(SimResult {
        building_ids,
        t_in,
        q_heat,
        energy_kwh,
        dt_s: dt_weather,
        model_variant: MODEL_VARIANT.to_string(),
        seed: opts.seed,
    })
}
