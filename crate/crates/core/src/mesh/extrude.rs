//! Footprint extrusion at LOD-0 (oriented bounding box) and LOD-1.

use crate::polygon::Point2;

use super::{earcut::triangulate_polygon, BuildingModel, FaceTag, MeshBuilder, MeshError, TriMesh};

/// Minimum-area oriented bounding rectangle of a point set, CCW corners.
///
/// Rotating calipers over the convex hull: the optimal rectangle is aligned
/// with one hull edge.
pub fn min_area_rect(points: &[Point2]) -> Option<[Point2; 4]> {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return None;
    }
    let mut best: Option<(f64, [Point2; 4])> = None;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let ux = (b.x - a.x) / len;
        let uy = (b.y - a.y) / len;
        // Coordinates in the (u, v) frame of this edge.
        let (mut u0, mut u1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let u = p.x * ux + p.y * uy;
            let v = -p.x * uy + p.y * ux;
            u0 = u0.min(u);
            u1 = u1.max(u);
            v0 = v0.min(v);
            v1 = v1.max(v);
        }
        let area = (u1 - u0) * (v1 - v0);
        if best.as_ref().map_or(true, |(ba, _)| area < *ba) {
            let corner = |u: f64, v: f64| Point2::new(u * ux - v * uy, u * uy + v * ux);
            best = Some((area, [corner(u0, v0), corner(u1, v0), corner(u1, v1), corner(u0, v1)]));
        }
    }
    best.map(|(_, rect)| rect)
}

/// Andrew's monotone chain; returns the hull CCW without the closing point.
fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point2, a: Point2, b: Point2| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// LOD-0: the footprint's minimum-area oriented bounding box extruded from
/// `base_z` to `base_z + height_m`. Twelve triangles; walls/roof/ground tags.
pub fn lod0_mesh(b: &BuildingModel) -> Result<TriMesh, MeshError> {
    let rect = min_area_rect(&b.footprint.outer.vertices).ok_or_else(|| {
        MeshError::DegenerateFootprint { id: b.id.clone() }
    })?;
    if rect[0].dist(rect[1]) < 1e-9 || rect[1].dist(rect[2]) < 1e-9 {
        return Err(MeshError::DegenerateFootprint { id: b.id.clone() });
    }
    let mut mb = MeshBuilder::new();
    extrude_ring(&mut mb, &rect, b.base_z, b.base_z + b.height_m, 0);
    cap(&mut mb, &rect, &[[0, 1, 2], [0, 2, 3]], b.base_z + b.height_m, FaceTag::Roof, 4, false);
    cap(&mut mb, &rect, &[[0, 1, 2], [0, 2, 3]], b.base_z, FaceTag::Ground, 5, true);
    Ok(mb.finish())
}

/// LOD-1: footprint extrusion. Caps by ear clipping (holes bridged), two wall
/// triangles per footprint edge; watertight with volume = area × height.
pub fn lod1_mesh(b: &BuildingModel) -> Result<TriMesh, MeshError> {
    if b.footprint.area() < 1e-9 {
        return Err(MeshError::DegenerateFootprint { id: b.id.clone() });
    }
    let (pts, cap_tris) = triangulate_polygon(&b.footprint)?;
    let (z0, z1) = (b.base_z, b.base_z + b.height_m);
    let mut mb = MeshBuilder::new();

    // Walls, one facet per footprint edge. Outer is CCW and holes CW, so the
    // same winding puts every wall normal outward (into hole shafts for holes).
    let mut facet = 0u32;
    let mut ring_start = 0usize;
    for ring in b.footprint.rings() {
        let n = ring.vertices.len();
        for i in 0..n {
            let p = pts[ring_start + i];
            let q = pts[ring_start + (i + 1) % n];
            let pb = [p.x, p.y, z0];
            let qb = [q.x, q.y, z0];
            let pt = [p.x, p.y, z1];
            let qt = [q.x, q.y, z1];
            mb.triangle(pb, qb, qt, FaceTag::Wall, facet);
            mb.triangle(pb, qt, pt, FaceTag::Wall, facet);
            facet += 1;
        }
        ring_start += n;
    }
    let roof_facet = facet;
    let ground_facet = facet + 1;
    // Roof keeps the CCW cap orientation (normal +z); the ground gets the
    // reversed winding (normal -z). Two passes keep each facet contiguous.
    for t in &cap_tris {
        let v = |k: usize| [pts[t[k]].x, pts[t[k]].y, z1];
        mb.triangle(v(0), v(1), v(2), FaceTag::Roof, roof_facet);
    }
    for t in &cap_tris {
        let v = |k: usize| [pts[t[k]].x, pts[t[k]].y, z0];
        mb.triangle(v(0), v(2), v(1), FaceTag::Ground, ground_facet);
    }
    Ok(mb.finish())
}

/// Walls of a convex CCW ring between two heights, one facet per edge.
fn extrude_ring(mb: &mut MeshBuilder, ring: &[Point2], z0: f64, z1: f64, first_facet: u32) {
    let n = ring.len();
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let facet = first_facet + i as u32;
        mb.triangle([p.x, p.y, z0], [q.x, q.y, z0], [q.x, q.y, z1], FaceTag::Wall, facet);
        mb.triangle([p.x, p.y, z0], [q.x, q.y, z1], [p.x, p.y, z1], FaceTag::Wall, facet);
    }
}

fn cap(
    mb: &mut MeshBuilder,
    ring: &[Point2],
    tris: &[[usize; 3]],
    z: f64,
    tag: FaceTag,
    facet: u32,
    flip: bool,
) {
    for t in tris {
        let v = |k: usize| [ring[t[k]].x, ring[t[k]].y, z];
        if flip {
            mb.triangle(v(0), v(2), v(1), tag, facet);
        } else {
            mb.triangle(v(0), v(1), v(2), tag, facet);
        }
    }
}
