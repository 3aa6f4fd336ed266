//! Archetype table and zone parameter derivation from meshed buildings.

use serde::{Deserialize, Serialize};

use crate::mesh::{signed_volume_of, FaceTag, Scene};

use super::{ThermalError, ZoneParams};

/// Window share of gross wall area.
pub const WINDOW_WALL_FRACTION: f64 = 0.15;
/// Mass–air coupling conductance per m² of envelope, W/(m²·K).
const H_EM_PER_M2: f64 = 9.1;
/// Volumetric heat capacity of air, J/(m³·K).
const AIR_RHO_CP: f64 = 1.2 * 1006.0;

/// One row of the archetype table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    pub u_env: f64,
    pub u_win: f64,
    pub g: f64,
    pub c_vol: f64,
    pub ach: f64,
}

/// Thermal archetypes (old / renovated / new by default), loadable from the
/// documented CSV data file.
#[derive(Debug, Clone)]
pub struct ArchetypeTable {
    rows: Vec<Archetype>,
}

impl ArchetypeTable {
    /// The compiled-in copy of `data/archetypes.csv`.
    pub fn builtin() -> ArchetypeTable {
        Self::from_csv(include_str!("../../data/archetypes.csv"))
            .expect("bundled archetype table is valid")
    }

    pub fn from_csv(text: &str) -> Result<ArchetypeTable, ThermalError> {
        let mut rows = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != "name,u_env,u_win,g,c_vol,ach" {
                    return Err(ThermalError::ArchetypeTable(format!(
                        "unexpected header {line:?}"
                    )));
                }
                saw_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(ThermalError::ArchetypeTable(format!("bad row {line:?}")));
            }
            let num = |s: &str| -> Result<f64, ThermalError> {
                s.parse()
                    .map_err(|_| ThermalError::ArchetypeTable(format!("bad number {s:?}")))
            };
            let row = Archetype {
                name: f[0].to_string(),
                u_env: num(f[1])?,
                u_win: num(f[2])?,
                g: num(f[3])?,
                c_vol: num(f[4])?,
                ach: num(f[5])?,
            };
            if row.u_env <= 0.0 || row.u_win <= 0.0 || !(0.0..=1.0).contains(&row.g)
                || row.c_vol <= 0.0 || row.ach < 0.0
            {
                return Err(ThermalError::ArchetypeTable(format!(
                    "out-of-range values in row {line:?}"
                )));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(ThermalError::ArchetypeTable("no data rows".into()));
        }
        Ok(ArchetypeTable { rows })
    }

    pub fn get(&self, name: &str) -> Option<&Archetype> {
        self.rows.iter().find(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|a| a.name.as_str())
    }
}

/// Setpoint and heater limits applied uniformly across a run.
#[derive(Debug, Clone, Copy)]
pub struct ZoneDefaults {
    pub setpoint_c: f64,
    pub max_heater_w: f64,
}

impl Default for ZoneDefaults {
    fn default() -> Self {
        ZoneDefaults { setpoint_c: 20.0, max_heater_w: f64::INFINITY }
    }
}

/// Derive RC zone parameters for one meshed building.
///
/// Envelope area comes from the mesh (walls + roof), window area is a fixed
/// share of wall area, capacitance scales with enclosed volume.
pub fn derive_params(
    scene: &Scene,
    building: &str,
    table: &ArchetypeTable,
    archetype: &str,
    defaults: &ZoneDefaults,
) -> Result<ZoneParams, ThermalError> {
    let arch = table
        .get(archetype)
        .ok_or_else(|| ThermalError::UnknownArchetype(archetype.to_string()))?;
    let range = scene
        .building_range(building)
        .ok_or_else(|| ThermalError::UnknownBuilding(building.to_string()))?;
    let mut wall_area = 0.0;
    let mut roof_area = 0.0;
    for face in scene.faces.iter().filter(|f| f.building == building) {
        match face.tag {
            FaceTag::Wall => wall_area += face.area,
            FaceTag::Roof => roof_area += face.area,
            _ => {}
        }
    }
    let volume = signed_volume_of(&scene.mesh, range);
    let a_env = wall_area + roof_area;
    let a_win = WINDOW_WALL_FRACTION * wall_area;
    Ok(ZoneParams {
        a_env,
        a_win,
        u_env: arch.u_env,
        u_win: arch.u_win,
        c_total: arch.c_vol * volume,
        g: arch.g,
        setpoint_c: defaults.setpoint_c,
        max_heater_w: defaults.max_heater_w,
        h_inf: arch.ach / 3600.0 * volume * AIR_RHO_CP,
        h_em: H_EM_PER_M2 * a_env,
    })
}
