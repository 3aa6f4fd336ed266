//! Building, terrain and vegetation meshing, plus scene assembly.
//!
//! Buildings are extruded from repaired footprints at LOD-0 (minimum-area
//! oriented bounding box) or LOD-1 (footprint extrusion). Building sub-meshes
//! are watertight and outward-oriented; terrain and trees are open tagged
//! geometry in the same scene container. Scene assembly is non-conformal:
//! buildings rest on, but are not stitched into, the terrain triangulation.

mod earcut;
mod extrude;
mod obj;
mod scene;
mod terrain;
mod vegetation;

pub use earcut::triangulate_polygon;
pub use extrude::{lod0_mesh, lod1_mesh, min_area_rect};
pub use obj::write_obj;
pub use scene::{build_scene, Scene, SceneFace, TileContent};
pub use terrain::{embed_buildings, terrain_mesh, TerrainSampler};
pub use vegetation::{tree_mesh, TreeTemplate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polygon::{PolygonWithHoles, Ring};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("building {id}: degenerate footprint")]
    DegenerateFootprint { id: String },
    #[error("triangulation failed on ring with {vertices} vertices{}", detail(.ring))]
    Triangulation { vertices: usize, ring: Vec<(f64, f64)> },
    #[error("building {id}: footprint outside terrain extent")]
    FootprintOutsideTerrain { id: String },
    #[error("terrain region contains no valid elevation data")]
    EmptyTerrain,
    #[error("duplicate building id {id} with conflicting geometry")]
    ConflictingDuplicate { id: String },
    #[error("unknown face id {0}")]
    UnknownFace(String),
}

fn detail(ring: &[(f64, f64)]) -> String {
    if ring.len() <= 8 {
        format!(": {ring:?}")
    } else {
        String::new()
    }
}

/// Per-triangle semantic tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceTag {
    Wall,
    Roof,
    Ground,
    Terrain,
    Tree,
}

impl FaceTag {
    pub fn name(self) -> &'static str {
        match self {
            FaceTag::Wall => "wall",
            FaceTag::Roof => "roof",
            FaceTag::Ground => "ground",
            FaceTag::Terrain => "terrain",
            FaceTag::Tree => "tree",
        }
    }
}

/// Level of detail for building meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lod {
    Lod0,
    Lod1,
}

/// A building ready for meshing: repaired footprint plus vertical extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingModel {
    pub id: String,
    pub footprint: PolygonWithHoles,
    pub base_z: f64,
    pub height_m: f64,
    pub lod: Lod,
}

/// Tagged triangle mesh. Vertices are welded by exact coordinates within one
/// logical mesh; `facets` groups triangles into logical faces (one wall, the
/// roof, ...) by a per-mesh id used for shading-mask bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub tags: Vec<FaceTag>,
    pub facets: Vec<u32>,
}

impl TriMesh {
    pub fn new() -> Self {
        TriMesh::default()
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_vertices(&self, i: usize) -> [[f64; 3]; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(i);
        let u = sub(b, a);
        let v = sub(c, a);
        0.5 * norm(cross(u, v))
    }

    /// Unit normal by right-hand winding.
    pub fn triangle_normal(&self, i: usize) -> [f64; 3] {
        let [a, b, c] = self.triangle_vertices(i);
        let n = cross(sub(b, a), sub(c, a));
        let l = norm(n);
        [n[0] / l, n[1] / l, n[2] / l]
    }

    /// Divergence-theorem volume; positive for outward-oriented closed meshes.
    pub fn signed_volume(&self) -> f64 {
        signed_volume_of(self, 0..self.triangles.len())
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Append `other`, offsetting indices. No cross-mesh welding.
    pub fn merge(&mut self, other: &TriMesh) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
        self.tags.extend_from_slice(&other.tags);
        self.facets.extend_from_slice(&other.facets);
    }
}

/// Incremental mesh builder that welds vertices by exact coordinates.
#[derive(Default)]
pub(crate) struct MeshBuilder {
    mesh: TriMesh,
    lookup: std::collections::HashMap<[u64; 3], u32>,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, p: [f64; 3]) -> u32 {
        let key = [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
        *self.lookup.entry(key).or_insert_with(|| {
            self.mesh.vertices.push(p);
            (self.mesh.vertices.len() - 1) as u32
        })
    }

    pub fn triangle(&mut self, a: [f64; 3], b: [f64; 3], c: [f64; 3], tag: FaceTag, facet: u32) {
        let (ia, ib, ic) = (self.vertex(a), self.vertex(b), self.vertex(c));
        self.push_indices(ia, ib, ic, tag, facet);
    }

    pub fn push_indices(&mut self, a: u32, b: u32, c: u32, tag: FaceTag, facet: u32) {
        self.mesh.triangles.push([a, b, c]);
        self.mesh.tags.push(tag);
        self.mesh.facets.push(facet);
    }

    pub fn finish(self) -> TriMesh {
        self.mesh
    }
}

/// Volume contribution of a triangle range (divergence theorem).
pub fn signed_volume_of(mesh: &TriMesh, range: std::ops::Range<usize>) -> f64 {
    let mut six_v = 0.0;
    for i in range {
        let [a, b, c] = mesh.triangle_vertices(i);
        six_v += dot(a, cross(b, c));
    }
    six_v / 6.0
}

/// Number of undirected edges in the range not shared by exactly two
/// triangles; zero for a watertight 2-manifold.
pub fn watertight_violations(mesh: &TriMesh, range: std::ops::Range<usize>) -> usize {
    let mut counts: std::collections::HashMap<(u32, u32), u32> = Default::default();
    for i in range {
        let t = mesh.triangles[i];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = if a < b { (a, b) } else { (b, a) };
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts.values().filter(|&&c| c != 2).count()
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Convenience for tests and synthetic scenes: a repaired rectangle footprint.
pub fn rect_footprint(x0: f64, y0: f64, w: f64, h: f64) -> PolygonWithHoles {
    crate::polygon::repair(&[Ring::new(vec![
        crate::polygon::Point2::new(x0, y0),
        crate::polygon::Point2::new(x0 + w, y0),
        crate::polygon::Point2::new(x0 + w, y0 + h),
        crate::polygon::Point2::new(x0, y0 + h),
    ])])
    .expect("rectangle footprints are always repairable")
}
