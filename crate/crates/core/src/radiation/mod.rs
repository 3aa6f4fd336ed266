//! Monte Carlo shading masks and view factors over a BVH-accelerated scene.
//!
//! Sampling is deterministic: one counting-seeded RNG stream per (face, bin)
//! or (surface, ray block), derived from the master seed by hashing, so
//! results are bit-identical regardless of thread count or execution order.

mod bvh;
mod crossed_strings;
mod sampling;

pub use bvh::{ray_hit, Bvh, Hit, Ray, DEFAULT_T_MIN};
pub use crossed_strings::crossed_strings_2d;
pub use sampling::stream;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Scene, TriMesh};
use crate::solar::{SkyGrid, SunDirection};

/// Default mask sampling density; 3σ < 0.01 would need ~22k samples, 64 keeps
/// 3/√n at 0.375 for bin-level checks while masks average over many bins.
pub const DEFAULT_MASK_SAMPLES: usize = 64;
/// Default view-factor rays per surface (3σ ≈ 0.005 at F ≈ 0.2).
pub const DEFAULT_VF_RAYS: usize = 100_000;

const RAY_BLOCK: usize = 8192;

// Distinct master-seed domains so mask and view-factor streams with the same
// (index, counter) pair never coincide.
const MASK_SEED_DOMAIN: u64 = 0x6d61_736b;
const VF_SEED_DOMAIN: u64 = 0x7669_6577;

#[derive(Debug, Error)]
pub enum RadiationError {
    #[error("unknown face id {0}")]
    UnknownFace(String),
    #[error("surface {0} has zero area")]
    ZeroAreaSurface(String),
    #[error("surfaces are not disjoint (triangle {0} claimed twice)")]
    OverlappingSurfaces(usize),
    #[error("degenerate segment")]
    DegenerateSegment,
    #[error("emitter and receiver segments intersect")]
    IntersectingSegments,
}

/// Per-face blocked fraction over a sky grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadingMask {
    pub face_id: String,
    pub grid: SkyGrid,
    /// Row-major `[az_bin * n_alt + alt_bin]`, each in [0, 1].
    pub blocked: Vec<f64>,
    pub samples_per_bin: usize,
    pub seed: u64,
}

impl ShadingMask {
    pub fn blocked_at(&self, az_bin: usize, alt_bin: usize) -> f64 {
        self.blocked[az_bin * self.grid.n_alt + alt_bin]
    }

    /// Nearest-bin lookup; `None` below the horizon.
    pub fn lookup(&self, dir: SunDirection) -> Option<f64> {
        self.grid.bin_of(dir).map(|(ia, ja)| self.blocked_at(ia, ja))
    }

    /// Cosine-weighted unblocked fraction of the sky hemisphere:
    /// `Σ (1-blocked)·ΔΩ·max(0, cosθ) / π`. 1.0 for an unobstructed roof,
    /// 0.5 for an unobstructed vertical wall.
    pub fn sky_view(&self, normal: [f64; 3]) -> f64 {
        let mut sum = 0.0;
        for ia in 0..self.grid.n_az {
            for ja in 0..self.grid.n_alt {
                let v = self.grid.bin_center(ia, ja).unit_vector();
                let cos_theta = v[0] * normal[0] + v[1] * normal[1] + v[2] * normal[2];
                if cos_theta > 0.0 {
                    sum += (1.0 - self.blocked_at(ia, ja))
                        * self.grid.bin_solid_angle(ja)
                        * cos_theta;
                }
            }
        }
        (sum / std::f64::consts::PI).clamp(0.0, 1.0)
    }
}

/// Monte Carlo shading mask for one scene face.
///
/// Per sky bin, `samples_per_bin` origin points are drawn area-uniformly on
/// the face and one direction per point uniformly within the bin's solid
/// angle; the blocked fraction counts rays hitting any triangle outside the
/// face. Bins whose center points into or behind the face plane are fully
/// blocked by construction.
pub fn shading_mask(
    scene: &Scene,
    bvh: &Bvh,
    face_id: &str,
    grid: SkyGrid,
    samples_per_bin: usize,
    seed: u64,
) -> Result<ShadingMask, RadiationError> {
    let face_idx = scene
        .face_index(face_id)
        .ok_or_else(|| RadiationError::UnknownFace(face_id.to_string()))?;
    let face = &scene.faces[face_idx];
    let picker = TrianglePicker::new(&scene.mesh, face.tri_range.clone().map(|t| t as u32));
    let normal = face.normal;
    let face_u32 = face_idx as u32;

    let blocked: Vec<f64> = (0..grid.n_bins())
        .into_par_iter()
        .map(|bin| {
            let (ia, ja) = (bin / grid.n_alt, bin % grid.n_alt);
            let center = grid.bin_center(ia, ja).unit_vector();
            let facing = center[0] * normal[0] + center[1] * normal[1] + center[2] * normal[2];
            if facing <= 0.0 {
                return 1.0; // self-occluded by construction
            }
            let mut rng = stream(seed ^ MASK_SEED_DOMAIN, face_idx as u64, bin as u64);
            let mut hits = 0usize;
            for _ in 0..samples_per_bin {
                let origin = picker.sample_point(&mut rng, &scene.mesh);
                let dir = sample_dir_in_bin(&mut rng, &grid, ia, ja);
                let ray = Ray { origin, dir };
                if bvh.any_hit_where(&ray, DEFAULT_T_MIN, |t| scene.tri_face[t] != face_u32) {
                    hits += 1;
                }
            }
            hits as f64 / samples_per_bin as f64
        })
        .collect();

    Ok(ShadingMask {
        face_id: face_id.to_string(),
        grid,
        blocked,
        samples_per_bin,
        seed,
    })
}

/// Direction uniform over the bin's patch of the unit sphere.
fn sample_dir_in_bin<R: Rng>(rng: &mut R, grid: &SkyGrid, ia: usize, ja: usize) -> [f64; 3] {
    let (az0, az1, alt0, alt1) = grid.bin_bounds(ia, ja);
    let az = az0 + rng.gen::<f64>() * (az1 - az0);
    let (s0, s1) = (alt0.to_radians().sin(), alt1.to_radians().sin());
    let sin_alt = s0 + rng.gen::<f64>() * (s1 - s0);
    let alt = sin_alt.clamp(-1.0, 1.0).asin().to_degrees();
    SunDirection::new(az, alt).unit_vector()
}

/// Area-weighted triangle picker for point sampling.
struct TrianglePicker {
    tris: Vec<u32>,
    cumulative: Vec<f64>,
}

impl TrianglePicker {
    fn new(mesh: &TriMesh, tris: impl Iterator<Item = u32>) -> Self {
        let tris: Vec<u32> = tris.collect();
        let mut cumulative = Vec::with_capacity(tris.len());
        let mut acc = 0.0;
        for &t in &tris {
            acc += mesh.triangle_area(t as usize);
            cumulative.push(acc);
        }
        TrianglePicker { tris, cumulative }
    }

    fn total_area(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> u32 {
        let u = rng.gen::<f64>() * self.total_area();
        let i = self.cumulative.partition_point(|&c| c < u).min(self.tris.len() - 1);
        self.tris[i]
    }

    fn sample_point<R: Rng>(&self, rng: &mut R, mesh: &TriMesh) -> [f64; 3] {
        let t = self.pick(rng) as usize;
        let [a, b, c] = mesh.triangle_vertices(t);
        let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        [
            a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]),
            a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]),
            a[2] + u * (b[2] - a[2]) + v * (c[2] - a[2]),
        ]
    }

    fn sample_point_and_tri<R: Rng>(&self, rng: &mut R, mesh: &TriMesh) -> ([f64; 3], usize) {
        let t = self.pick(rng) as usize;
        let [a, b, c] = mesh.triangle_vertices(t);
        let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        (
            [
                a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]),
                a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]),
                a[2] + u * (b[2] - a[2]) + v * (c[2] - a[2]),
            ],
            t,
        )
    }
}

/// A named set of scene triangles treated as one radiative surface.
#[derive(Debug, Clone)]
pub struct Surface {
    pub id: String,
    pub triangles: Vec<u32>,
}

/// Surface-to-surface view factor matrix with Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewFactorMatrix {
    pub ids: Vec<String>,
    pub areas: Vec<f64>,
    /// Row-major n×n fractions.
    pub f: Vec<f64>,
    /// Standard error per entry: sqrt(F(1-F)/rays).
    pub sigma: Vec<f64>,
    pub rays_per_surface: usize,
    pub seed: u64,
}

impl ViewFactorMatrix {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn f(&self, i: usize, j: usize) -> f64 {
        self.f[i * self.n() + j]
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.n() + j]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.n()).map(|j| self.f(i, j)).sum()
    }
}

/// Monte Carlo view factors: area-uniform points, cosine-weighted directions
/// about the local triangle normal, first-hit attribution.
pub fn view_factors(
    mesh: &TriMesh,
    bvh: &Bvh,
    surfaces: &[Surface],
    rays_per_surface: usize,
    seed: u64,
) -> Result<ViewFactorMatrix, RadiationError> {
    let n = surfaces.len();
    // Triangle -> surface map; also validates disjointness.
    let mut tri_surface: Vec<u32> = vec![u32::MAX; mesh.len()];
    for (i, s) in surfaces.iter().enumerate() {
        for &t in &s.triangles {
            if tri_surface[t as usize] != u32::MAX {
                return Err(RadiationError::OverlappingSurfaces(t as usize));
            }
            tri_surface[t as usize] = i as u32;
        }
    }
    let pickers: Vec<TrianglePicker> = surfaces
        .iter()
        .map(|s| TrianglePicker::new(mesh, s.triangles.iter().copied()))
        .collect();
    let areas: Vec<f64> = pickers.iter().map(TrianglePicker::total_area).collect();
    for (s, &a) in surfaces.iter().zip(&areas) {
        if a <= 0.0 {
            return Err(RadiationError::ZeroAreaSurface(s.id.clone()));
        }
    }

    let blocks_per_surface = rays_per_surface.div_ceil(RAY_BLOCK);
    let jobs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..blocks_per_surface).map(move |b| (i, b)))
        .collect();
    let partials: Vec<(usize, Vec<u64>)> = jobs
        .into_par_iter()
        .map(|(i, block)| {
            let mut counts = vec![0u64; n];
            let start = block * RAY_BLOCK;
            let nrays = RAY_BLOCK.min(rays_per_surface - start);
            let mut rng = stream(seed ^ VF_SEED_DOMAIN, i as u64, block as u64);
            for _ in 0..nrays {
                let (origin, tri) = pickers[i].sample_point_and_tri(&mut rng, mesh);
                let normal = mesh.triangle_normal(tri);
                let dir = cosine_weighted(&mut rng, normal);
                let ray = Ray { origin, dir };
                if let (Some(hit), _) = bvh.nearest_hit_where(&ray, DEFAULT_T_MIN, |_| true) {
                    let j = tri_surface[hit.triangle];
                    if j != u32::MAX {
                        counts[j as usize] += 1;
                    }
                }
            }
            (i, counts)
        })
        .collect();

    let mut f = vec![0.0; n * n];
    for (i, counts) in partials {
        for (j, c) in counts.into_iter().enumerate() {
            f[i * n + j] += c as f64 / rays_per_surface as f64;
        }
    }
    let sigma = f
        .iter()
        .map(|&fij| (fij * (1.0 - fij) / rays_per_surface as f64).sqrt())
        .collect();
    Ok(ViewFactorMatrix {
        ids: surfaces.iter().map(|s| s.id.clone()).collect(),
        areas,
        f,
        sigma,
        rays_per_surface,
        seed,
    })
}

/// One radiative surface per building: all exterior (wall + roof) triangles.
pub fn building_surfaces(scene: &Scene) -> Vec<Surface> {
    scene
        .building_ids()
        .map(|id| Surface {
            id: id.to_string(),
            triangles: scene
                .exterior_faces(id)
                .flat_map(|f| f.tri_range.clone())
                .map(|t| t as u32)
                .collect(),
        })
        .collect()
}

/// Cosine-weighted hemisphere direction about `normal`.
fn cosine_weighted<R: Rng>(rng: &mut R, normal: [f64; 3]) -> [f64; 3] {
    let u1 = rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = u1.sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    let (lx, ly) = (r * theta.cos(), r * theta.sin());
    let lz = (1.0 - u1).max(0.0).sqrt();
    // Orthonormal basis around the normal.
    let helper = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let t1 = normalize(cross3(helper, normal));
    let t2 = cross3(normal, t1);
    [
        lx * t1[0] + ly * t2[0] + lz * normal[0],
        lx * t1[1] + ly * t2[1] + lz * normal[1],
        lx * t1[2] + ly * t2[2] + lz * normal[2],
    ]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / l, v[1] / l, v[2] / l]
}

/// Mask CSV: header row of altitude bin centers, one row per azimuth bin.
pub fn mask_to_csv(mask: &ShadingMask) -> String {
    let mut out = String::from("azimuth_deg");
    for ja in 0..mask.grid.n_alt {
        out.push_str(&format!(",{:.2}", mask.grid.bin_center(0, ja).altitude_deg));
    }
    out.push('\n');
    for ia in 0..mask.grid.n_az {
        out.push_str(&format!("{:.2}", mask.grid.bin_center(ia, 0).azimuth_deg));
        for ja in 0..mask.grid.n_alt {
            out.push_str(&format!(",{:.6}", mask.blocked_at(ia, ja)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TileIndex;
    use crate::mesh::{
        build_scene, rect_footprint, BuildingModel, FaceTag, Lod, MeshBuilder, TileContent,
    };

    fn box_building(id: &str, x0: f64, y0: f64, w: f64, d: f64, h: f64) -> BuildingModel {
        BuildingModel {
            id: id.into(),
            footprint: rect_footprint(x0, y0, w, d),
            base_z: 0.0,
            height_m: h,
            lod: Lod::Lod1,
        }
    }

    fn scene_of(buildings: Vec<BuildingModel>) -> Scene {
        build_scene(&[TileContent { tile: TileIndex::new(0, 0, 0), buildings }]).unwrap()
    }

    fn rect_mesh_xz(y: f64, x0: f64, x1: f64, z0: f64, z1: f64, normal_pos_y: bool) -> TriMesh {
        // Rectangle in a y = const plane.
        let mut mb = MeshBuilder::new();
        let (a, b, c, d) = (
            [x0, y, z0],
            [x1, y, z0],
            [x1, y, z1],
            [x0, y, z1],
        );
        if normal_pos_y {
            mb.triangle(a, c, b, FaceTag::Wall, 0);
            mb.triangle(a, d, c, FaceTag::Wall, 0);
        } else {
            mb.triangle(a, b, c, FaceTag::Wall, 0);
            mb.triangle(a, c, d, FaceTag::Wall, 0);
        }
        mb.finish()
    }

    #[test]
    fn isolated_roof_mask_is_unblocked() {
        let scene = scene_of(vec![box_building("a", 0.0, 0.0, 2.0, 2.0, 3.0)]);
        let bvh = Bvh::build(&scene.mesh);
        let mask =
            shading_mask(&scene, &bvh, "a/roof", SkyGrid::new(8, 4), 32, 1).unwrap();
        assert!(mask.blocked.iter().all(|&b| b == 0.0));
        assert!((mask.sky_view([0.0, 0.0, 1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roof_under_parallel_plate_is_fully_blocked() {
        let mut scene = scene_of(vec![box_building("a", 0.0, 0.0, 2.0, 2.0, 3.0)]);
        // Large plate 1 m above the roof.
        let mut mb = MeshBuilder::new();
        let z = 4.0;
        let s = 500.0;
        mb.triangle([-s, -s, z], [s, -s, z], [s, s, z], FaceTag::Terrain, 0);
        mb.triangle([-s, -s, z], [s, s, z], [-s, s, z], FaceTag::Terrain, 0);
        scene.append_mesh(&mb.finish());
        let bvh = Bvh::build(&scene.mesh);
        let mask =
            shading_mask(&scene, &bvh, "a/roof", SkyGrid::new(8, 4), 32, 1).unwrap();
        assert!(mask.blocked.iter().all(|&b| b == 1.0), "{:?}", mask.blocked);
        assert!(mask.sky_view([0.0, 0.0, 1.0]) < 1e-12);
    }

    #[test]
    fn unknown_face_errors() {
        let scene = scene_of(vec![box_building("a", 0.0, 0.0, 2.0, 2.0, 3.0)]);
        let bvh = Bvh::build(&scene.mesh);
        assert!(matches!(
            shading_mask(&scene, &bvh, "a/chimney", SkyGrid::default(), 8, 1),
            Err(RadiationError::UnknownFace(_))
        ));
    }

    #[test]
    fn wall_mask_matches_halfspace_slab_oracle() {
        // East-facing wall; tall wide slab at x = 5 spanning y in [-5, 5].
        let mut scene = scene_of(vec![box_building("a", -0.2, -0.5, 0.2, 1.0, 1.0)]);
        let mut mb = MeshBuilder::new();
        let (x, y0, y1, z0, z1) = (5.0, -5.0, 5.0, -100.0, 100.0);
        mb.triangle([x, y0, z0], [x, y0, z1], [x, y1, z1], FaceTag::Terrain, 0);
        mb.triangle([x, y0, z0], [x, y1, z1], [x, y1, z0], FaceTag::Terrain, 0);
        scene.append_mesh(&mb.finish());
        let bvh = Bvh::build(&scene.mesh);

        let east_wall = scene
            .exterior_faces("a")
            .find(|f| f.normal[0] > 0.99)
            .expect("east wall exists")
            .id
            .clone();
        let grid = SkyGrid::new(8, 4);
        let samples = 256;
        let mask = shading_mask(&scene, &bvh, &east_wall, grid, samples, 11).unwrap();
        let face = scene.face(&east_wall).unwrap();
        let tol = 3.0 / (samples as f64).sqrt();

        for ia in 0..grid.n_az {
            for ja in 0..grid.n_alt {
                let center = grid.bin_center(ia, ja);
                let v = center.unit_vector();
                let facing = v[0] * face.normal[0] + v[1] * face.normal[1] + v[2] * face.normal[2];
                let expected = if facing <= 0.0 {
                    1.0
                } else {
                    // Analytic point-vs-slab test from the face center.
                    let origin = [0.0, 0.0, 0.5];
                    let t = (x - origin[0]) / v[0];
                    let yy = origin[1] + t * v[1];
                    let zz = origin[2] + t * v[2];
                    if t > 0.0 && yy >= y0 && yy <= y1 && zz >= z0 && zz <= z1 {
                        1.0
                    } else {
                        0.0
                    }
                };
                let got = mask.blocked_at(ia, ja);
                assert!(
                    (got - expected).abs() <= tol,
                    "bin ({ia},{ja}) center {center:?}: got {got}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn mask_is_deterministic() {
        let scene = scene_of(vec![
            box_building("a", 0.0, 0.0, 2.0, 2.0, 3.0),
            box_building("b", 5.0, 0.0, 2.0, 2.0, 9.0),
        ]);
        let bvh = Bvh::build(&scene.mesh);
        let m1 = shading_mask(&scene, &bvh, "a/roof", SkyGrid::default(), 16, 99).unwrap();
        let m2 = shading_mask(&scene, &bvh, "a/roof", SkyGrid::default(), 16, 99).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn mask_monotone_under_scene_growth() {
        let base = scene_of(vec![box_building("a", 0.0, 0.0, 2.0, 2.0, 3.0)]);
        let grown = scene_of(vec![
            box_building("a", 0.0, 0.0, 2.0, 2.0, 3.0),
            box_building("b", 4.0, -1.0, 2.0, 4.0, 12.0),
        ]);
        let (bvh_a, bvh_b) = (Bvh::build(&base.mesh), Bvh::build(&grown.mesh));
        let grid = SkyGrid::new(16, 5);
        for face in ["a/roof", "a/wall0", "a/wall1", "a/wall2", "a/wall3"] {
            let m0 = shading_mask(&base, &bvh_a, face, grid, 32, 7).unwrap();
            let m1 = shading_mask(&grown, &bvh_b, face, grid, 32, 7).unwrap();
            for (b0, b1) in m0.blocked.iter().zip(&m1.blocked) {
                assert!(b1 >= b0, "{face}: {b1} < {b0}");
            }
        }
    }

    #[test]
    fn coplanar_squares_cannot_see_each_other() {
        let mut mesh = rect_mesh_xz(0.0, 0.0, 1.0, 0.0, 1.0, true);
        mesh.merge(&rect_mesh_xz(0.0, 2.0, 3.0, 0.0, 1.0, true));
        let bvh = Bvh::build(&mesh);
        let surfaces = vec![
            Surface { id: "s1".into(), triangles: vec![0, 1] },
            Surface { id: "s2".into(), triangles: vec![2, 3] },
        ];
        let vf = view_factors(&mesh, &bvh, &surfaces, 5000, 3).unwrap();
        assert_eq!(vf.f(0, 1), 0.0);
        assert_eq!(vf.f(1, 0), 0.0);
    }

    #[test]
    fn closed_box_interior_rows_sum_to_one() {
        // Unit cube with inward normals, one surface per face.
        let b = box_building("c", 0.0, 0.0, 1.0, 1.0, 1.0);
        let scene = scene_of(vec![b]);
        let mut mesh = scene.mesh.clone();
        // Flip every triangle so normals point inward.
        for t in &mut mesh.triangles {
            t.swap(1, 2);
        }
        let bvh = Bvh::build(&mesh);
        let surfaces: Vec<Surface> = scene
            .faces
            .iter()
            .map(|f| Surface {
                id: f.id.clone(),
                triangles: f.tri_range.clone().map(|t| t as u32).collect(),
            })
            .collect();
        let rays = 20_000;
        let vf = view_factors(&mesh, &bvh, &surfaces, rays, 5).unwrap();
        for i in 0..vf.n() {
            let sum = vf.row_sum(i);
            // Closed enclosure: nearly every ray lands on some surface (rare
            // seam escapes of the intersection test are tolerated, never a
            // row sum above one).
            assert!(sum <= 1.0 + 1e-12, "row {i} sums to {sum}");
            assert!(sum > 0.995, "row {i} sums to {sum}");
            assert!(vf.f(i, i) < 3.0 * (0.25 / rays as f64).sqrt());
        }
    }

    #[test]
    fn parallel_unit_plates_match_analytic_value() {
        // Two directly opposed unit squares at distance 1. Independent scalar
        // evaluation of the standard analytic formula gives 0.1998247...
        let analytic = analytic_parallel_plates(1.0, 1.0, 1.0);
        assert!((analytic - 0.19983).abs() < 1e-5);

        let mut mesh = rect_mesh_xz(0.0, 0.0, 1.0, 0.0, 1.0, true);
        mesh.merge(&rect_mesh_xz(1.0, 0.0, 1.0, 0.0, 1.0, false));
        let bvh = Bvh::build(&mesh);
        let surfaces = vec![
            Surface { id: "a".into(), triangles: vec![0, 1] },
            Surface { id: "b".into(), triangles: vec![2, 3] },
        ];
        let rays = 40_000;
        let vf = view_factors(&mesh, &bvh, &surfaces, rays, 17).unwrap();
        let f12 = vf.f(0, 1);
        let s = vf.sigma(0, 1);
        assert!((f12 - analytic).abs() <= 3.0 * s, "F12 {f12} vs {analytic} (3σ = {})", 3.0 * s);
        // Reciprocity with equal areas.
        let f21 = vf.f(1, 0);
        assert!((f12 - f21).abs() <= 3.0 * (vf.sigma(0, 1) + vf.sigma(1, 0)));
    }

    /// Standard analytic view factor between directly opposed parallel
    /// rectangles (a × b at distance c), scalar evaluation.
    pub fn analytic_parallel_plates(a: f64, b: f64, c: f64) -> f64 {
        let x = a / c;
        let y = b / c;
        let x2 = x * x;
        let y2 = y * y;
        let term1 = ((1.0 + x2) * (1.0 + y2) / (1.0 + x2 + y2)).sqrt().ln();
        let term2 = x * (1.0 + y2).sqrt() * (x / (1.0 + y2).sqrt()).atan();
        let term3 = y * (1.0 + x2).sqrt() * (y / (1.0 + x2).sqrt()).atan();
        let term4 = -x * x.atan() - y * y.atan();
        2.0 / (std::f64::consts::PI * x * y) * (term1 + term2 + term3 + term4)
    }

    #[test]
    fn view_factors_are_deterministic() {
        let mut mesh = rect_mesh_xz(0.0, 0.0, 1.0, 0.0, 1.0, true);
        mesh.merge(&rect_mesh_xz(1.0, 0.0, 1.0, 0.0, 1.0, false));
        let bvh = Bvh::build(&mesh);
        let surfaces = vec![
            Surface { id: "a".into(), triangles: vec![0, 1] },
            Surface { id: "b".into(), triangles: vec![2, 3] },
        ];
        let v1 = view_factors(&mesh, &bvh, &surfaces, 10_000, 8).unwrap();
        let v2 = view_factors(&mesh, &bvh, &surfaces, 10_000, 8).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn zero_area_surface_errors() {
        let mesh = rect_mesh_xz(0.0, 0.0, 1.0, 0.0, 1.0, true);
        let bvh = Bvh::build(&mesh);
        let surfaces = vec![Surface { id: "empty".into(), triangles: vec![] }];
        assert!(matches!(
            view_factors(&mesh, &bvh, &surfaces, 100, 1),
            Err(RadiationError::ZeroAreaSurface(_))
        ));
    }

    #[test]
    fn mc_embedding_reproduces_crossed_strings() {
        // 2D scene: parallel unit segments at distance 1, embedded as long
        // extruded strips; the central emitter band sees the 2D value.
        let f2d = crossed_strings_2d(
            (crate::polygon::Point2::new(0.0, 0.0), crate::polygon::Point2::new(1.0, 0.0)),
            (crate::polygon::Point2::new(0.0, 1.0), crate::polygon::Point2::new(1.0, 1.0)),
            &[],
        )
        .unwrap();
        assert!((f2d - (2f64.sqrt() - 1.0)).abs() < 1e-12);

        // Strips extend along z; emitter band |z| <= 2.5, receiver |z| <= 100.
        let mut mb = MeshBuilder::new();
        mb.triangle([0.0, 0.0, -2.5], [1.0, 0.0, 2.5], [1.0, 0.0, -2.5], FaceTag::Wall, 0);
        mb.triangle([0.0, 0.0, -2.5], [0.0, 0.0, 2.5], [1.0, 0.0, 2.5], FaceTag::Wall, 0);
        let mut mesh = mb.finish();
        let mut mb2 = MeshBuilder::new();
        mb2.triangle([0.0, 1.0, -100.0], [1.0, 1.0, -100.0], [1.0, 1.0, 100.0], FaceTag::Wall, 1);
        mb2.triangle([0.0, 1.0, -100.0], [1.0, 1.0, 100.0], [0.0, 1.0, 100.0], FaceTag::Wall, 1);
        mesh.merge(&mb2.finish());
        // Emitter normal must be +y (towards the receiver).
        assert!(mesh.triangle_normal(0)[1] > 0.99);
        assert!(mesh.triangle_normal(2)[1] < -0.99);

        let bvh = Bvh::build(&mesh);
        let surfaces = vec![
            Surface { id: "emitter".into(), triangles: vec![0, 1] },
            Surface { id: "receiver".into(), triangles: vec![2, 3] },
        ];
        let rays = 60_000;
        let vf = view_factors(&mesh, &bvh, &surfaces, rays, 23).unwrap();
        let f_mc = vf.f(0, 1);
        let s = vf.sigma(0, 1);
        assert!(
            (f_mc - f2d).abs() <= 3.0 * s,
            "MC {f_mc} vs crossed-strings {f2d} (3σ = {})",
            3.0 * s
        );
    }

    #[test]
    fn mask_csv_layout() {
        let scene = scene_of(vec![box_building("a", 0.0, 0.0, 2.0, 2.0, 3.0)]);
        let bvh = Bvh::build(&scene.mesh);
        let mask = shading_mask(&scene, &bvh, "a/roof", SkyGrid::new(8, 4), 4, 1).unwrap();
        let csv = mask_to_csv(&mask);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 8);
        assert!(lines[0].starts_with("azimuth_deg,11.25,33.75"));
        assert_eq!(lines[1].split(',').count(), 1 + 4);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(8))]

            /// Reciprocity within 3σ on random two-box scenes.
            #[test]
            fn reciprocity_on_random_scenes(
                dx in 2.5f64..8.0,
                h1 in 2.0f64..10.0,
                h2 in 2.0f64..10.0,
                w in 1.0f64..3.0,
            ) {
                let scene = scene_of(vec![
                    box_building("a", 0.0, 0.0, w, 2.0, h1),
                    box_building("b", dx, 0.0, 1.5, 2.0, h2),
                ]);
                let bvh = Bvh::build(&scene.mesh);
                let surfaces = building_surfaces(&scene);
                let vf = view_factors(&scene.mesh, &bvh, &surfaces, 20_000, 31).unwrap();
                for i in 0..vf.n() {
                    for j in 0..vf.n() {
                        if i == j { continue; }
                        let lhs = (vf.areas[i] * vf.f(i, j) - vf.areas[j] * vf.f(j, i)).abs();
                        let rhs = 3.0 * (vf.areas[i] * vf.sigma(i, j) + vf.areas[j] * vf.sigma(j, i));
                        prop_assert!(lhs <= rhs.max(1e-9), "A_iF_ij {lhs} > 3σ bound {rhs}");
                    }
                }
            }
        }
    }
}
