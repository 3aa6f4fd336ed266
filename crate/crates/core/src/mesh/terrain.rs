//! Terrain meshing from elevation rasters and slope embedding of buildings.

use crate::geo::{sample_elevation, ElevationGrid};
use crate::polygon::Point2;

use super::{BuildingModel, FaceTag, MeshBuilder, MeshError, TriMesh};

/// Uniform terrain lattice over `region` (local meters), one node per raster
/// cell center, two triangles per cell. Cells with nodata nodes are skipped.
pub fn terrain_mesh(
    grid: &ElevationGrid,
    region: (Point2, Point2),
) -> Result<TriMesh, MeshError> {
    let (lo, hi) = region;
    let (x_min, y_min, x_max, y_max) = grid.extent();
    let col_of = |x: f64| ((x - x_min) / grid.cell_size - 0.5).floor();
    let row_of = |y: f64| ((y - y_min) / grid.cell_size - 0.5).floor();
    let c0 = col_of(lo.x.max(x_min)).max(0.0) as usize;
    let r0 = row_of(lo.y.max(y_min)).max(0.0) as usize;
    let c1 = (col_of(hi.x.min(x_max)) as usize + 1).min(grid.ncols - 1);
    let r1 = (row_of(hi.y.min(y_max)) as usize + 1).min(grid.nrows - 1);
    if c1 <= c0 || r1 <= r0 {
        return Err(MeshError::EmptyTerrain);
    }

    let ncols = c1 - c0 + 1;
    let nrows = r1 - r0 + 1;
    let mut node_z: Vec<Option<f64>> = Vec::with_capacity(nrows * ncols);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let x = x_min + (c as f64 + 0.5) * grid.cell_size;
            let y = y_min + (r as f64 + 0.5) * grid.cell_size;
            node_z.push(sample_elevation(grid, x, y).ok());
        }
    }

    let mut mb = MeshBuilder::new();
    let node = |r: usize, c: usize| (r - r0) * ncols + (c - c0);
    for r in r0..r1 {
        for c in c0..c1 {
            let corners = [node(r, c), node(r, c + 1), node(r + 1, c + 1), node(r + 1, c)];
            let Some(zs) = corners
                .iter()
                .map(|&i| node_z[i])
                .collect::<Option<Vec<f64>>>()
            else {
                continue;
            };
            let pos = |k: usize, z: f64| {
                let (rr, cc) = match k {
                    0 => (r, c),
                    1 => (r, c + 1),
                    2 => (r + 1, c + 1),
                    _ => (r + 1, c),
                };
                let (x, y) = grid.cell_center(rr, cc);
                [x, y, z]
            };
            let (a, b, cc, d) = (pos(0, zs[0]), pos(1, zs[1]), pos(2, zs[2]), pos(3, zs[3]));
            // CCW from above so normals point up.
            mb.triangle(a, b, cc, FaceTag::Terrain, 0);
            mb.triangle(a, cc, d, FaceTag::Terrain, 0);
        }
    }
    let mesh = mb.finish();
    if mesh.is_empty() {
        return Err(MeshError::EmptyTerrain);
    }
    Ok(mesh)
}

/// Plan-view point location on a terrain mesh with a uniform bucket grid.
pub struct TerrainSampler<'a> {
    mesh: &'a TriMesh,
    origin: (f64, f64),
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> TerrainSampler<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let (lo, hi) = mesh.bbox();
        let n = mesh.len().max(1);
        let side = (n as f64).sqrt().ceil() as usize;
        let nx = side.clamp(1, 512);
        let ny = side.clamp(1, 512);
        let cell_x = ((hi[0] - lo[0]) / nx as f64).max(1e-9);
        let cell_y = ((hi[1] - lo[1]) / ny as f64).max(1e-9);
        let cell = cell_x.max(cell_y);
        let mut buckets = vec![Vec::new(); nx * ny];
        for i in 0..mesh.len() {
            let [a, b, c] = mesh.triangle_vertices(i);
            let tx0 = a[0].min(b[0]).min(c[0]);
            let tx1 = a[0].max(b[0]).max(c[0]);
            let ty0 = a[1].min(b[1]).min(c[1]);
            let ty1 = a[1].max(b[1]).max(c[1]);
            let bx0 = (((tx0 - lo[0]) / cell) as usize).min(nx - 1);
            let bx1 = (((tx1 - lo[0]) / cell) as usize).min(nx - 1);
            let by0 = (((ty0 - lo[1]) / cell) as usize).min(ny - 1);
            let by1 = (((ty1 - lo[1]) / cell) as usize).min(ny - 1);
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    buckets[by * nx + bx].push(i as u32);
                }
            }
        }
        TerrainSampler { mesh, origin: (lo[0], lo[1]), cell, nx, ny, buckets }
    }

    /// Terrain elevation at plan position (x, y), if covered.
    pub fn elevation(&self, x: f64, y: f64) -> Option<f64> {
        let bx = ((x - self.origin.0) / self.cell).floor();
        let by = ((y - self.origin.1) / self.cell).floor();
        if bx < 0.0 || by < 0.0 {
            return None;
        }
        let (bx, by) = (bx as usize, by as usize);
        if bx >= self.nx || by >= self.ny {
            return None;
        }
        for &t in &self.buckets[by * self.nx + bx] {
            let [a, b, c] = self.mesh.triangle_vertices(t as usize);
            if let Some(z) = barycentric_z([x, y], a, b, c) {
                return Some(z);
            }
        }
        None
    }
}

fn barycentric_z(p: [f64; 2], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Option<f64> {
    let v0 = [b[0] - a[0], b[1] - a[1]];
    let v1 = [c[0] - a[0], c[1] - a[1]];
    let v2 = [p[0] - a[0], p[1] - a[1]];
    let den = v0[0] * v1[1] - v1[0] * v0[1];
    if den.abs() < 1e-18 {
        return None;
    }
    let u = (v2[0] * v1[1] - v1[0] * v2[1]) / den;
    let v = (v0[0] * v2[1] - v2[0] * v0[1]) / den;
    const EPS: f64 = 1e-9;
    if u >= -EPS && v >= -EPS && u + v <= 1.0 + EPS {
        Some(a[2] + u * (b[2] - a[2]) + v * (c[2] - a[2]))
    } else {
        None
    }
}

/// Interior sample spacing for slope embedding; vertex-only sampling would
/// miss interior peaks.
const EMBED_GRID_M: f64 = 1.0;

/// Drop each building to the lowest terrain point under its footprint and
/// stretch it so the roof stays at the nominal height above the highest one.
pub fn embed_buildings(
    terrain: &TriMesh,
    buildings: &[BuildingModel],
) -> Result<Vec<BuildingModel>, MeshError> {
    let sampler = TerrainSampler::new(terrain);
    let mut out = Vec::with_capacity(buildings.len());
    for b in buildings {
        let mut z_min = f64::INFINITY;
        let mut z_max = f64::NEG_INFINITY;
        let mut record = |z: Option<f64>| -> bool {
            match z {
                Some(z) => {
                    z_min = z_min.min(z);
                    z_max = z_max.max(z);
                    true
                }
                None => false,
            }
        };
        let mut all_inside = true;
        for ring in b.footprint.rings() {
            for v in &ring.vertices {
                all_inside &= record(sampler.elevation(v.x, v.y));
            }
        }
        let (lo, hi) = b.footprint.bbox();
        let mut y = (lo.y / EMBED_GRID_M).ceil() * EMBED_GRID_M;
        while y <= hi.y {
            let mut x = (lo.x / EMBED_GRID_M).ceil() * EMBED_GRID_M;
            while x <= hi.x {
                if b.footprint.contains_point(Point2::new(x, y)) {
                    all_inside &= record(sampler.elevation(x, y));
                }
                x += EMBED_GRID_M;
            }
            y += EMBED_GRID_M;
        }
        if !all_inside || !z_min.is_finite() {
            return Err(MeshError::FootprintOutsideTerrain { id: b.id.clone() });
        }
        let mut nb = b.clone();
        nb.base_z = z_min;
        nb.height_m = b.height_m + (z_max - z_min);
        out.push(nb);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::parse_elevation;
    use crate::mesh::{rect_footprint, Lod};

    fn grid(nrows: usize, ncols: usize, body: &str) -> ElevationGrid {
        let header = format!(
            "ncols {ncols}\nnrows {nrows}\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n"
        );
        parse_elevation(&format!("{header}{body}")).unwrap()
    }

    fn full_region(g: &ElevationGrid) -> (Point2, Point2) {
        let (x0, y0, x1, y1) = g.extent();
        (Point2::new(x0, y0), Point2::new(x1, y1))
    }

    #[test]
    fn flat_grid_mesh() {
        let g = grid(3, 3, "0 0 0\n0 0 0\n0 0 0\n");
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        assert_eq!(m.len(), 8); // (3-1)x(3-1) cells x 2
        assert!(m.vertices.iter().all(|v| v[2] == 0.0));
        // Flat terrain area equals planform area (2x2 of cell centers).
        assert!((m.surface_area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn planar_ramp_reproduced_exactly() {
        // z = y: rows south to north are 0.5, 1.5, 2.5 at cell centers.
        let g = grid(3, 3, "2.5 2.5 2.5\n1.5 1.5 1.5\n0.5 0.5 0.5\n");
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        for v in &m.vertices {
            assert!((v[2] - v[1]).abs() < 1e-12, "node {v:?} off the plane");
        }
        // Sloped terrain area strictly exceeds planform area.
        let planform = 4.0;
        assert!(m.surface_area() > planform + 0.1);
    }

    #[test]
    fn nodata_cells_are_skipped() {
        // One nodata corner kills exactly the one cell touching it.
        let g = grid(4, 4, "-9999 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n");
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        assert_eq!(m.len(), (3 * 3 - 1) * 2);
    }

    #[test]
    fn all_nodata_region_errors() {
        let g = grid(2, 2, "-9999 -9999\n-9999 -9999\n");
        assert!(matches!(
            terrain_mesh(&g, full_region(&g)),
            Err(MeshError::EmptyTerrain)
        ));
    }

    #[test]
    fn sampler_matches_node_elevations() {
        let g = grid(3, 3, "2.5 2.5 2.5\n1.5 1.5 1.5\n0.5 0.5 0.5\n");
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        let s = TerrainSampler::new(&m);
        assert!((s.elevation(1.5, 1.5).unwrap() - 1.5).abs() < 1e-12);
        assert!((s.elevation(1.0, 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(s.elevation(100.0, 100.0).is_none());
    }

    #[test]
    fn embed_on_flat_terrain_keeps_height() {
        let g = grid(4, 4, &"5 5 5 5\n".repeat(4));
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        let b = BuildingModel {
            id: "a".into(),
            footprint: rect_footprint(1.0, 1.0, 2.0, 2.0),
            base_z: 0.0,
            height_m: 10.0,
            lod: Lod::Lod1,
        };
        let out = embed_buildings(&m, &[b]).unwrap();
        assert_eq!(out[0].base_z, 5.0);
        assert_eq!(out[0].height_m, 10.0);
    }

    #[test]
    fn embed_on_ramp_stretches_building() {
        // z = y - 0.5 at cell centers: ramp from 0 at y=0.5 to 3 at y=3.5.
        let g = grid(4, 4, "3 3 3 3\n2 2 2 2\n1 1 1 1\n0 0 0 0\n");
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        let b = BuildingModel {
            id: "ramp".into(),
            footprint: rect_footprint(1.0, 0.5, 2.0, 2.0),
            base_z: 0.0,
            height_m: 10.0,
            lod: Lod::Lod1,
        };
        let out = embed_buildings(&m, &[b]).unwrap();
        // Footprint spans terrain z in [0, 2]: base at the min, roof kept
        // height above the max.
        assert!((out[0].base_z - 0.0).abs() < 1e-9);
        assert!((out[0].height_m - 12.0).abs() < 1e-9);
        // Roof never drops below nominal height over the highest ground.
        assert!(out[0].base_z + out[0].height_m >= 2.0 + 10.0 - 1e-9);
    }

    #[test]
    fn embed_outside_terrain_errors() {
        let g = grid(3, 3, "0 0 0\n0 0 0\n0 0 0\n");
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        let b = BuildingModel {
            id: "far".into(),
            footprint: rect_footprint(50.0, 50.0, 2.0, 2.0),
            base_z: 0.0,
            height_m: 10.0,
            lod: Lod::Lod1,
        };
        match embed_buildings(&m, &[b]) {
            Err(MeshError::FootprintOutsideTerrain { id }) => assert_eq!(id, "far"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn embed_translation_equivariance() {
        // Two flat plateaus at different elevations.
        let g = grid(4, 8, &"2 2 2 2 7 7 7 7\n".repeat(4));
        let m = terrain_mesh(&g, full_region(&g)).unwrap();
        let mk = |x0: f64| BuildingModel {
            id: format!("b{x0}"),
            footprint: rect_footprint(x0, 1.0, 1.5, 1.5),
            base_z: 0.0,
            height_m: 6.0,
            lod: Lod::Lod1,
        };
        let out = embed_buildings(&m, &[mk(1.0), mk(5.0)]).unwrap();
        assert_eq!(out[0].height_m, out[1].height_m);
        assert!((out[1].base_z - out[0].base_z - 5.0).abs() < 1e-9);
    }
}
