//! Scene assembly over tiles: id deduplication, cross-tile union, meshing,
//! and the building/face index used by radiation and simulation.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use crate::geo::TileIndex;
use crate::polygon::{intersects, union_touching, PolygonWithHoles};

use super::{lod0_mesh, lod1_mesh, BuildingModel, FaceTag, Lod, MeshError, TriMesh};

/// Buildings contributed by one map tile. Buildings spanning a tile border
/// appear in every tile they touch, with the same id and geometry.
#[derive(Debug, Clone)]
pub struct TileContent {
    pub tile: TileIndex,
    pub buildings: Vec<BuildingModel>,
}

/// One logical building surface (a wall, the roof, or the ground plate).
#[derive(Debug, Clone)]
pub struct SceneFace {
    pub id: String,
    pub building: String,
    pub tag: FaceTag,
    /// Contiguous triangle range in the scene mesh.
    pub tri_range: Range<usize>,
    pub normal: [f64; 3],
    pub area: f64,
}

/// Merged scene: one mesh, a building → triangle-range index, and the
/// per-building face table.
pub struct Scene {
    pub mesh: TriMesh,
    ranges: Vec<(Range<usize>, String)>,
    range_by_id: BTreeMap<String, usize>,
    pub faces: Vec<SceneFace>,
    face_by_id: HashMap<String, usize>,
    /// Face index per triangle (`u32::MAX` for unowned geometry).
    pub tri_face: Vec<u32>,
    /// Final building models after dedup/union/embedding.
    pub buildings: Vec<BuildingModel>,
}

impl Scene {
    /// Building id owning a triangle, if any.
    pub fn owner_of(&self, tri: usize) -> Option<&str> {
        let i = self.ranges.partition_point(|(r, _)| r.end <= tri);
        self.ranges
            .get(i)
            .filter(|(r, _)| r.contains(&tri))
            .map(|(_, id)| id.as_str())
    }

    pub fn building_range(&self, id: &str) -> Option<Range<usize>> {
        self.range_by_id.get(id).map(|&i| self.ranges[i].0.clone())
    }

    pub fn building_ids(&self) -> impl Iterator<Item = &str> {
        self.range_by_id.keys().map(String::as_str)
    }

    pub fn face(&self, id: &str) -> Option<&SceneFace> {
        self.face_by_id.get(id).map(|&i| &self.faces[i])
    }

    pub fn face_index(&self, id: &str) -> Option<usize> {
        self.face_by_id.get(id).copied()
    }

    /// Wall and roof faces of one building (the ground plate is not exposed
    /// to sun or sky).
    pub fn exterior_faces<'a>(
        &'a self,
        building: &'a str,
    ) -> impl Iterator<Item = &'a SceneFace> + 'a {
        self.faces.iter().filter(move |f| {
            f.building == building && matches!(f.tag, FaceTag::Wall | FaceTag::Roof)
        })
    }

    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        self.mesh.bbox()
    }

    /// Append unowned geometry (terrain, vegetation) to the scene mesh.
    pub fn append_mesh(&mut self, mesh: &TriMesh) {
        self.mesh.merge(mesh);
        self.tri_face.resize(self.mesh.len(), u32::MAX);
    }
}

/// Assemble tiles into one scene: deduplicate by id, union buildings that
/// touch across tile junctions, mesh, and index.
pub fn build_scene(tiles: &[TileContent]) -> Result<Scene, MeshError> {
    // Deduplicate cross-tile copies by id; conflicting geometry is an error.
    let mut by_id: BTreeMap<String, BuildingModel> = BTreeMap::new();
    for tile in tiles {
        for b in &tile.buildings {
            match by_id.get(&b.id) {
                None => {
                    by_id.insert(b.id.clone(), b.clone());
                }
                Some(existing) => {
                    if !same_geometry(existing, b) {
                        return Err(MeshError::ConflictingDuplicate { id: b.id.clone() });
                    }
                }
            }
        }
    }
    let deduped: Vec<BuildingModel> = by_id.into_values().collect();
    let merged = merge_touching(deduped);

    // Mesh every building and merge; ids are already sorted.
    let mut mesh = TriMesh::new();
    let mut ranges = Vec::with_capacity(merged.len());
    let mut range_by_id = BTreeMap::new();
    let mut faces: Vec<SceneFace> = Vec::new();
    let mut tri_face: Vec<u32> = Vec::new();
    for b in &merged {
        let sub = match b.lod {
            Lod::Lod0 => lod0_mesh(b)?,
            Lod::Lod1 => lod1_mesh(b)?,
        };
        let start = mesh.len();
        mesh.merge(&sub);
        let range = start..mesh.len();
        collect_faces(&mesh, range.clone(), &b.id, &mut faces, &mut tri_face);
        range_by_id.insert(b.id.clone(), ranges.len());
        ranges.push((range, b.id.clone()));
    }
    let face_by_id = faces
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.clone(), i))
        .collect();
    Ok(Scene {
        mesh,
        ranges,
        range_by_id,
        faces,
        face_by_id,
        tri_face,
        buildings: merged,
    })
}

fn same_geometry(a: &BuildingModel, b: &BuildingModel) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() < 1e-9;
    a.footprint == b.footprint
        && close(a.base_z, b.base_z)
        && close(a.height_m, b.height_m)
        && a.lod == b.lod
}

/// Union buildings whose footprints touch or intersect. The merged building
/// keeps the smallest member id; height is the area-weighted mean so the
/// heated volume is approximately preserved.
fn merge_touching(buildings: Vec<BuildingModel>) -> Vec<BuildingModel> {
    let n = buildings.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != c {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if intersects(&buildings[i].footprint, &buildings[j].footprint) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in groups.values() {
        if members.len() == 1 {
            out.push(buildings[members[0]].clone());
            continue;
        }
        let polys: Vec<PolygonWithHoles> = members
            .iter()
            .map(|&i| buildings[i].footprint.clone())
            .collect();
        let unions = union_touching(&polys);
        let id = members
            .iter()
            .map(|&i| buildings[i].id.as_str())
            .min()
            .expect("group is non-empty")
            .to_string();
        let total_area: f64 = polys.iter().map(|p| p.area()).sum();
        let height = members
            .iter()
            .map(|&i| buildings[i].height_m * buildings[i].footprint.area())
            .sum::<f64>()
            / total_area;
        let base_z = members
            .iter()
            .map(|&i| buildings[i].base_z)
            .fold(f64::INFINITY, f64::min);
        let lod = buildings[members[0]].lod;
        let many = unions.len() > 1;
        for (k, footprint) in unions.into_iter().enumerate() {
            out.push(BuildingModel {
                id: if many { format!("{id}+{k}") } else { id.clone() },
                footprint,
                base_z,
                height_m: height,
                lod,
            });
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Group a building range into faces by contiguous facet id.
fn collect_faces(
    mesh: &TriMesh,
    range: Range<usize>,
    building: &str,
    faces: &mut Vec<SceneFace>,
    tri_face: &mut Vec<u32>,
) {
    tri_face.resize(range.end, u32::MAX);
    let mut wall_count = 0usize;
    let mut i = range.start;
    while i < range.end {
        let facet = mesh.facets[i];
        let tag = mesh.tags[i];
        let mut j = i;
        let mut area = 0.0;
        while j < range.end && mesh.facets[j] == facet && mesh.tags[j] == tag {
            area += mesh.triangle_area(j);
            j += 1;
        }
        let name = match tag {
            FaceTag::Wall => {
                wall_count += 1;
                format!("{building}/wall{}", wall_count - 1)
            }
            FaceTag::Roof => format!("{building}/roof"),
            FaceTag::Ground => format!("{building}/ground"),
            other => format!("{building}/{}{facet}", other.name()),
        };
        let face_idx = faces.len() as u32;
        for t in i..j {
            tri_face[t] = face_idx;
        }
        faces.push(SceneFace {
            id: name,
            building: building.to_string(),
            tag,
            tri_range: i..j,
            normal: mesh.triangle_normal(i),
            area,
        });
        i = j;
    }
}
