//! 2D polygon hygiene and boolean union.
//!
//! Footprints arrive as raw rings in local meters. Before extrusion they are
//! snapped to a 1 mm grid, cleaned of duplicate/collinear vertices, oriented
//! (outer CCW, holes CW), and buildings whose closures touch or intersect are
//! merged into single polygons. The union works on the planar subdivision of
//! all snapped edges: edges are split at pairwise intersections, classified by
//! sampling both sides of their midpoint, and the surviving boundary edges are
//! traced into loops.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Snap tolerance in meters (1 mm grid).
pub const SNAP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum PolygonError {
    #[error("ring {ring} degenerated to {remaining} vertices after cleanup")]
    DegenerateRing { ring: usize, remaining: usize },
    #[error("ring {ring} is self-intersecting and cannot be repaired")]
    SelfIntersecting { ring: usize },
    #[error("hole {hole} is not inside the outer ring")]
    HoleOutsideOuter { hole: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    fn snapped(self) -> Point2 {
        Point2 {
            x: (self.x / SNAP).round() * SNAP,
            y: (self.y / SNAP).round() * SNAP,
        }
    }

    /// Integer grid key; valid only for snapped points.
    fn key(self) -> (i64, i64) {
        ((self.x / SNAP).round() as i64, (self.y / SNAP).round() as i64)
    }
}

fn cross(ox: f64, oy: f64, ax: f64, ay: f64) -> f64 {
    ox * ay - oy * ax
}

/// Twice the signed area of triangle (a, b, c); positive if CCW.
fn orient2d(a: Point2, b: Point2, c: Point2) -> f64 {
    cross(b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y)
}

/// An ordered vertex list, implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub vertices: Vec<Point2>,
}

impl Ring {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Ring { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as (start, end) pairs, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn reverse(&mut self) {
        self.vertices.reverse();
    }

    /// Even-odd point containment; boundary points are not guaranteed either way.
    pub fn contains_point(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let xcross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < xcross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }
}

/// Shoelace formula. Positive iff the ring runs counter-clockwise.
pub fn signed_area(ring: &Ring) -> f64 {
    let n = ring.vertices.len();
    let mut sum = 0.0;
    for i in 0..n {
        let a = ring.vertices[i];
        let b = ring.vertices[(i + 1) % n];
        sum += a.x * b.y - b.x * a.y;
    }
    0.5 * sum
}

/// Outer ring CCW, holes CW, holes inside the outer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonWithHoles {
    pub outer: Ring,
    pub holes: Vec<Ring>,
}

impl PolygonWithHoles {
    /// Enclosed area: outer minus holes.
    pub fn area(&self) -> f64 {
        let mut a = signed_area(&self.outer).abs();
        for h in &self.holes {
            a -= signed_area(h).abs();
        }
        a
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        self.outer.bbox()
    }

    /// Point strictly inside the covered region (inside outer, outside all holes).
    pub fn contains_point(&self, p: Point2) -> bool {
        if !self.outer.contains_point(p) {
            return false;
        }
        !self.holes.iter().any(|h| h.contains_point(p))
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }
}

/// Snap, deduplicate, drop collinear vertices, orient, and validate rings.
///
/// The first ring is the outer boundary, the rest are holes. Self-intersecting
/// rings are rejected; this module does not attempt to split them.
pub fn repair(raw: &[Ring]) -> Result<PolygonWithHoles, PolygonError> {
    assert!(!raw.is_empty(), "repair needs at least an outer ring");
    let mut cleaned = Vec::with_capacity(raw.len());
    for (idx, ring) in raw.iter().enumerate() {
        let mut r = clean_ring(ring, idx)?;
        if self_intersects(&r) {
            return Err(PolygonError::SelfIntersecting { ring: idx });
        }
        let ccw = signed_area(&r) > 0.0;
        let want_ccw = idx == 0;
        if ccw != want_ccw {
            r.reverse();
        }
        cleaned.push(r);
    }
    let outer = cleaned.remove(0);
    for (i, hole) in cleaned.iter().enumerate() {
        let ok = hole.vertices.iter().all(|&v| {
            outer.contains_point(v) || dist_to_ring(v, &outer) <= SNAP
        });
        if !ok {
            return Err(PolygonError::HoleOutsideOuter { hole: i });
        }
    }
    Ok(PolygonWithHoles { outer, holes: cleaned })
}

fn clean_ring(ring: &Ring, idx: usize) -> Result<Ring, PolygonError> {
    let mut v: Vec<Point2> = ring.vertices.iter().map(|p| p.snapped()).collect();
    // Drop an explicit closing vertex.
    while v.len() > 1 && v.first().unwrap().key() == v.last().unwrap().key() {
        v.pop();
    }
    loop {
        let before = v.len();
        // Consecutive duplicates (within the snap tolerance).
        let mut out: Vec<Point2> = Vec::with_capacity(v.len());
        for p in v.iter().copied() {
            if out.last().map_or(true, |&q| p.dist(q) >= SNAP) {
                out.push(p);
            }
        }
        while out.len() > 1 && out.first().unwrap().dist(*out.last().unwrap()) < SNAP {
            out.pop();
        }
        // Collinear-within-tolerance vertices.
        let n = out.len();
        if n >= 3 {
            let mut keep = vec![true; n];
            for i in 0..n {
                let prev = out[(i + n - 1) % n];
                let cur = out[i];
                let next = out[(i + 1) % n];
                if dist_point_segment(cur, prev, next) < SNAP {
                    keep[i] = false;
                }
            }
            // Remove one vertex per pass so neighbors are re-evaluated.
            if let Some(first_drop) = keep.iter().position(|&k| !k) {
                out.remove(first_drop);
            }
        }
        let changed = out.len() != before;
        v = out;
        if !changed {
            break;
        }
    }
    if v.len() < 3 {
        return Err(PolygonError::DegenerateRing { ring: idx, remaining: v.len() });
    }
    Ok(Ring::new(v))
}

fn dist_point_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.dist(Point2::new(a.x + t * abx, a.y + t * aby))
}

fn dist_to_ring(p: Point2, ring: &Ring) -> f64 {
    ring.edges()
        .map(|(a, b)| dist_point_segment(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Closed-segment intersection test (shared point counts).
fn segments_intersect(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> bool {
    let d1 = orient2d(p3, p4, p1);
    let d2 = orient2d(p3, p4, p2);
    let d3 = orient2d(p1, p2, p3);
    let d4 = orient2d(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |d: f64, a: Point2, b: Point2, p: Point2| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(d1, p3, p4, p1) || on(d2, p3, p4, p2) || on(d3, p1, p2, p3) || on(d4, p1, p2, p4)
}

fn self_intersects(ring: &Ring) -> bool {
    let v = &ring.vertices;
    let n = v.len();
    for i in 0..n {
        let (a1, a2) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // Skip adjacent edges (they legitimately share an endpoint).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

fn segment_distance(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> f64 {
    if segments_intersect(p1, p2, p3, p4) {
        return 0.0;
    }
    dist_point_segment(p1, p3, p4)
        .min(dist_point_segment(p2, p3, p4))
        .min(dist_point_segment(p3, p1, p2))
        .min(dist_point_segment(p4, p1, p2))
}

/// True iff the closed regions share at least one point. Edge or vertex touch
/// within the snap tolerance counts as intersecting.
pub fn intersects(a: &PolygonWithHoles, b: &PolygonWithHoles) -> bool {
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    if alo.x > bhi.x + SNAP || blo.x > ahi.x + SNAP || alo.y > bhi.y + SNAP || blo.y > ahi.y + SNAP
    {
        return false;
    }
    for ra in a.rings() {
        for (a1, a2) in ra.edges() {
            for rb in b.rings() {
                for (b1, b2) in rb.edges() {
                    if segment_distance(a1, a2, b1, b2) <= SNAP {
                        return true;
                    }
                }
            }
        }
    }
    // No boundary contact: containment is the only remaining possibility.
    b.contains_point(a.outer.vertices[0]) || a.contains_point(b.outer.vertices[0])
}

/// Merge polygons whose closures touch or intersect; disjoint inputs pass
/// through unchanged. Output rings are repaired.
pub fn union_touching(polys: &[PolygonWithHoles]) -> Vec<PolygonWithHoles> {
    let n = polys.len();
    if n == 0 {
        return Vec::new();
    }
    // Connected components under `intersects`.
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
            if intersects(&polys[i], &polys[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in groups.values() {
        if members.len() == 1 {
            out.push(polys[members[0]].clone());
        } else {
            let group: Vec<&PolygonWithHoles> = members.iter().map(|&i| &polys[i]).collect();
            out.extend(union_group(&group));
        }
    }
    out
}

/// Union of one connected component by planar-subdivision boundary tracing.
fn union_group(group: &[&PolygonWithHoles]) -> Vec<PolygonWithHoles> {
    // 1. Collect every ring edge.
    let mut segs: Vec<(Point2, Point2)> = Vec::new();
    for poly in group {
        for ring in poly.rings() {
            for (a, b) in ring.edges() {
                segs.push((a, b));
            }
        }
    }
    // 2. Split segments at pairwise intersections and snapped T-junctions,
    //    iterating to a fixpoint: snapping a split point to the grid can
    //    create new junctions that need another pass.
    let mut pieces = subdivide_to_fixpoint(segs);
    // 3. Deduplicate undirected pieces (shared edges appear once per polygon).
    let mut seen = std::collections::HashSet::new();
    pieces.retain(|&(a, b)| {
        let (ka, kb) = (a.key(), b.key());
        seen.insert(if ka <= kb { (ka, kb) } else { (kb, ka) })
    });
    // 4. Keep boundary pieces (inside on exactly one side), oriented inside-left.
    let inside = |p: Point2| group.iter().any(|poly| poly.contains_point(p));
    let delta = 0.25 * SNAP;
    let mut boundary: Vec<(Point2, Point2)> = Vec::new();
    for (a, b) in pieces {
        let mid = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        let len = a.dist(b);
        let (nx, ny) = (-(b.y - a.y) / len, (b.x - a.x) / len);
        let left_in = inside(Point2::new(mid.x + delta * nx, mid.y + delta * ny));
        let right_in = inside(Point2::new(mid.x - delta * nx, mid.y - delta * ny));
        match (left_in, right_in) {
            (true, false) => boundary.push((a, b)),
            (false, true) => boundary.push((b, a)),
            _ => {}
        }
    }
    // 5. Trace loops, taking the most-counterclockwise turn at junctions so
    //    point-touching subregions stay separate simple rings.
    let mut by_start: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
    for (i, (a, _)) in boundary.iter().enumerate() {
        by_start.entry(a.key()).or_default().push(i);
    }
    let mut used = vec![false; boundary.len()];
    let mut loops: Vec<Ring> = Vec::new();
    for start in 0..boundary.len() {
        if used[start] {
            continue;
        }
        let mut verts = Vec::new();
        let mut cur = start;
        let cap = boundary.len() + 1;
        for _ in 0..cap {
            used[cur] = true;
            let (a, b) = boundary[cur];
            verts.push(a);
            if b.key() == boundary[start].0.key() {
                break;
            }
            let dir = (b.x - a.x, b.y - a.y);
            let candidates = by_start.get(&b.key()).map(Vec::as_slice).unwrap_or(&[]);
            let mut best: Option<(f64, usize)> = None;
            for &c in candidates {
                if used[c] {
                    continue;
                }
                let (ca, cb) = boundary[c];
                let od = (cb.x - ca.x, cb.y - ca.y);
                let ang = cross(dir.0, dir.1, od.0, od.1).atan2(dir.0 * od.0 + dir.1 * od.1);
                if best.map_or(true, |(ba, _)| ang > ba) {
                    best = Some((ang, c));
                }
            }
            match best {
                Some((_, c)) => cur = c,
                None => break, // open chain; drop it
            }
        }
        for simple in split_pinches(verts) {
            if simple.len() >= 3 {
                loops.push(Ring::new(simple));
            }
        }
    }
    // 6. Positive loops are outers, negative loops are holes of the smallest
    //    containing outer; sub-snap slivers are dropped.
    let mut outers: Vec<(Ring, f64)> = Vec::new();
    let mut holes: Vec<Ring> = Vec::new();
    for l in loops {
        let area = signed_area(&l);
        if area > 1e-6 {
            outers.push((l, area));
        } else if area < -1e-6 {
            holes.push(l);
        }
    }
    let mut assembled: Vec<(Ring, Vec<Ring>)> =
        outers.into_iter().map(|(r, _)| (r, Vec::new())).collect();
    for hole in holes {
        let probe = ring_centroid(&hole);
        let mut best: Option<(f64, usize)> = None;
        for (i, (outer, _)) in assembled.iter().enumerate() {
            if outer.contains_point(probe) || dist_to_ring(probe, outer) <= SNAP {
                let a = signed_area(outer);
                if best.map_or(true, |(ba, _)| a < ba) {
                    best = Some((a, i));
                }
            }
        }
        if let Some((_, i)) = best {
            assembled[i].1.push(hole);
        }
    }
    let mut out = Vec::new();
    for (outer, holes) in assembled {
        let mut rings = vec![outer];
        rings.extend(holes);
        match repair(&rings) {
            Ok(p) => out.push(p),
            Err(e) => log::warn!("union dropped an unrepairable ring: {e}"),
        }
    }
    out
}

fn lerp(a: Point2, b: Point2, t: f64) -> Point2 {
    Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

/// Split segments at pairwise intersections and at other pieces' endpoints
/// lying on their interior, snapping every cut to the grid, until stable.
fn subdivide_to_fixpoint(segs: Vec<(Point2, Point2)>) -> Vec<(Point2, Point2)> {
    let mut pieces = segs;
    for _pass in 0..12 {
        let n = pieces.len();
        let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (head, tail) = cuts.split_at_mut(j);
                split_params(pieces[i], pieces[j], &mut head[i], &mut tail[0]);
            }
        }
        // T-junction healing: an endpoint snapped onto another piece's
        // interior must become a node there.
        for i in 0..n {
            let (a, b) = pieces[i];
            let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
            if len2 == 0.0 {
                continue;
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                for e in [pieces[j].0, pieces[j].1] {
                    let t = ((e.x - a.x) * (b.x - a.x) + (e.y - a.y) * (b.y - a.y)) / len2;
                    if t <= 0.0 || t >= 1.0 {
                        continue;
                    }
                    if dist_point_segment(e, a, b) <= 0.75 * SNAP
                        && e.key() != a.key()
                        && e.key() != b.key()
                    {
                        cuts[i].push(t);
                    }
                }
            }
        }
        let mut next: Vec<(Point2, Point2)> = Vec::with_capacity(pieces.len());
        let mut changed = false;
        for (i, (a, b)) in pieces.iter().copied().enumerate() {
            let ts = &mut cuts[i];
            ts.push(0.0);
            ts.push(1.0);
            ts.sort_by(f64::total_cmp);
            let mut emitted = 0usize;
            for w in ts.windows(2) {
                let p = lerp(a, b, w[0]).snapped();
                let q = lerp(a, b, w[1]).snapped();
                if p.key() != q.key() {
                    next.push((p, q));
                    emitted += 1;
                }
            }
            if emitted != 1 {
                changed = true;
            }
        }
        pieces = next;
        if !changed {
            break;
        }
    }
    pieces
}

/// Area centroid (falls back to the vertex mean for degenerate rings).
fn ring_centroid(ring: &Ring) -> Point2 {
    let a = signed_area(ring);
    if a.abs() < 1e-12 {
        let n = ring.vertices.len() as f64;
        let (sx, sy) = ring
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), v| (sx + v.x, sy + v.y));
        return Point2::new(sx / n, sy / n);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for (p, q) in ring.edges() {
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Point2::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Decompose a loop that revisits a vertex into simple sub-loops.
fn split_pinches(verts: Vec<Point2>) -> Vec<Vec<Point2>> {
    let mut first_at: std::collections::HashMap<(i64, i64), usize> = Default::default();
    for (i, v) in verts.iter().enumerate() {
        if let Some(&j) = first_at.get(&v.key()) {
            let inner: Vec<Point2> = verts[j..i].to_vec();
            let mut outer: Vec<Point2> = verts[..j].to_vec();
            outer.extend_from_slice(&verts[i..]);
            let mut out = split_pinches(inner);
            out.extend(split_pinches(outer));
            return out;
        }
        first_at.insert(v.key(), i);
    }
    vec![verts]
}

/// Record the split parameters where segments (p1,p2) and (p3,p4) meet,
/// including collinear overlaps.
fn split_params(
    s1: (Point2, Point2),
    s2: (Point2, Point2),
    cuts1: &mut Vec<f64>,
    cuts2: &mut Vec<f64>,
) {
    let (p1, p2) = s1;
    let (p3, p4) = s2;
    let r = (p2.x - p1.x, p2.y - p1.y);
    let s = (p4.x - p3.x, p4.y - p3.y);
    let denom = cross(r.0, r.1, s.0, s.1);
    let qp = (p3.x - p1.x, p3.y - p1.y);
    if denom.abs() > 1e-12 {
        let t = cross(qp.0, qp.1, s.0, s.1) / denom;
        let u = cross(qp.0, qp.1, r.0, r.1) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            cuts1.push(t);
            cuts2.push(u);
        }
        return;
    }
    // Parallel. Only collinear overlaps need splitting.
    if cross(qp.0, qp.1, r.0, r.1).abs() > SNAP * r.0.hypot(r.1).max(1.0) {
        return;
    }
    let len2 = r.0 * r.0 + r.1 * r.1;
    if len2 == 0.0 {
        return;
    }
    let proj = |p: Point2| ((p.x - p1.x) * r.0 + (p.y - p1.y) * r.1) / len2;
    for (p, t) in [(p3, proj(p3)), (p4, proj(p4))] {
        if (0.0..=1.0).contains(&t) {
            cuts1.push(t);
            let _ = p;
        }
    }
    let slen2 = s.0 * s.0 + s.1 * s.1;
    if slen2 > 0.0 {
        let proj_s = |p: Point2| ((p.x - p3.x) * s.0 + (p.y - p3.y) * s.1) / slen2;
        for t in [proj_s(p1), proj_s(p2)] {
            if (0.0..=1.0).contains(&t) {
                cuts2.push(t);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn square(x0: f64, y0: f64, size: f64) -> Ring {
        Ring::new(vec![
            Point2::new(x0, y0),
            Point2::new(x0 + size, y0),
            Point2::new(x0 + size, y0 + size),
            Point2::new(x0, y0 + size),
        ])
    }

    fn repaired_square(x0: f64, y0: f64, size: f64) -> PolygonWithHoles {
        repair(&[square(x0, y0, size)]).unwrap()
    }

    #[test]
    fn signed_area_unit_square() {
        assert_eq!(signed_area(&square(0.0, 0.0, 1.0)), 1.0);
        let mut cw = square(0.0, 0.0, 1.0);
        cw.reverse();
        assert_eq!(signed_area(&cw), -1.0);
    }

    #[test]
    fn signed_area_345_triangle() {
        // Right triangle with legs 3 and 4: area = 0.5 * 3 * 4 = 6.
        let t = Ring::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(3.0, 4.0),
        ]);
        assert_eq!(signed_area(&t), 6.0);
    }

    #[test]
    fn repair_reorients_clockwise_outer() {
        let mut cw = square(0.0, 0.0, 1.0);
        cw.reverse();
        let p = repair(&[cw]).unwrap();
        assert!(signed_area(&p.outer) > 0.0);
        assert!((p.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repair_deduplicates_repeated_vertex() {
        let r = Ring::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]);
        let p = repair(&[r]).unwrap();
        assert_eq!(p.outer.len(), 4);
        assert!((p.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repair_removes_collinear_vertex() {
        let r = Ring::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]);
        let p = repair(&[r]).unwrap();
        assert_eq!(p.outer.len(), 4);
    }

    #[test]
    fn repair_rejects_bowtie() {
        let bowtie = Ring::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        assert!(matches!(
            repair(&[bowtie]),
            Err(PolygonError::SelfIntersecting { ring: 0 })
        ));
    }

    #[test]
    fn repair_rejects_degenerate() {
        let r = Ring::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1e-4, 0.0),
            Point2::new(0.0, 1e-4),
        ]);
        assert!(matches!(repair(&[r]), Err(PolygonError::DegenerateRing { .. })));
    }

    #[test]
    fn repair_is_idempotent() {
        let r = Ring::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0003, 0.0001),
            Point2::new(2.0, 1.5),
            Point2::new(1.0, 1.50004),
            Point2::new(0.0, 1.5),
        ]);
        let once = repair(&[r]).unwrap();
        let rings: Vec<Ring> = once.rings().cloned().collect();
        let twice = repair(&rings).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn repair_rejects_hole_outside() {
        let outer = square(0.0, 0.0, 1.0);
        let hole = square(5.0, 5.0, 0.5);
        assert!(matches!(
            repair(&[outer, hole]),
            Err(PolygonError::HoleOutsideOuter { hole: 0 })
        ));
    }

    #[test]
    fn intersects_edge_adjacent_and_disjoint() {
        let a = repaired_square(0.0, 0.0, 1.0);
        let b = repaired_square(1.0, 0.0, 1.0);
        let c = repaired_square(6.0, 0.0, 1.0);
        assert!(intersects(&a, &b));
        assert!(!intersects(&a, &c));
    }

    #[test]
    fn intersects_containment() {
        let big = repaired_square(0.0, 0.0, 4.0);
        let small = repaired_square(1.0, 1.0, 1.0);
        assert!(intersects(&big, &small));
        assert!(intersects(&small, &big));
    }

    #[test]
    fn intersects_polygon_inside_hole_is_false() {
        let outer = square(0.0, 0.0, 10.0);
        let hole = square(2.0, 2.0, 6.0);
        let donut = repair(&[outer, hole]).unwrap();
        let island = repaired_square(4.0, 4.0, 1.0);
        assert!(!intersects(&donut, &island));
    }

    #[test]
    fn union_edge_adjacent_squares() {
        let a = repaired_square(0.0, 0.0, 1.0);
        let b = repaired_square(1.0, 0.0, 1.0);
        let merged = union_touching(&[a, b]);
        assert_eq!(merged.len(), 1);
        // Expected 2x1 rectangle; shoelace gives area 2.
        assert!((merged[0].area() - 2.0).abs() < 1e-9);
        assert_eq!(merged[0].outer.len(), 4);
    }

    #[test]
    fn union_disjoint_passthrough() {
        let a = repaired_square(0.0, 0.0, 1.0);
        let b = repaired_square(6.0, 0.0, 1.0);
        let out = union_touching(&[a.clone(), b.clone()]);
        assert_eq!(out.len(), 2);
        let total: f64 = out.iter().map(|p| p.area()).sum();
        assert!((total - 2.0).abs() < 1e-9);
    }

    #[test]
    fn union_overlapping_squares() {
        // Offset by 0.5 in both axes: union area = 1 + 1 - 0.25.
        let a = repaired_square(0.0, 0.0, 1.0);
        let b = repaired_square(0.5, 0.5, 1.0);
        let merged = union_touching(&[a, b]);
        assert_eq!(merged.len(), 1);
        assert!((merged[0].area() - 1.75).abs() < 1e-9);
    }

    #[test]
    fn union_is_idempotent() {
        let polys = vec![
            repaired_square(0.0, 0.0, 1.0),
            repaired_square(0.5, 0.5, 1.0),
            repaired_square(4.0, 0.0, 2.0),
        ];
        let once = union_touching(&polys);
        let twice = union_touching(&once);
        assert_eq!(once.len(), twice.len());
        let mut a1: Vec<f64> = once.iter().map(|p| p.area()).collect();
        let mut a2: Vec<f64> = twice.iter().map(|p| p.area()).collect();
        a1.sort_by(f64::total_cmp);
        a2.sort_by(f64::total_cmp);
        for (x, y) in a1.iter().zip(&a2) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn union_outputs_are_pairwise_disjoint() {
        let polys = vec![
            repaired_square(0.0, 0.0, 1.0),
            repaired_square(0.9, 0.0, 1.0),
            repaired_square(5.0, 5.0, 1.0),
            repaired_square(5.5, 5.2, 1.0),
            repaired_square(-3.0, 0.0, 1.0),
        ];
        let out = union_touching(&polys);
        for i in 0..out.len() {
            for j in (i + 1)..out.len() {
                assert!(!intersects(&out[i], &out[j]));
            }
        }
    }

    #[test]
    fn union_ring_of_squares_creates_hole() {
        // Frame built from four overlapping rectangles around an empty middle.
        let horiz = |y: f64| repair(&[Ring::new(vec![
            Point2::new(0.0, y),
            Point2::new(3.0, y),
            Point2::new(3.0, y + 1.0),
            Point2::new(0.0, y + 1.0),
        ])])
        .unwrap();
        let vert = |x: f64| repair(&[Ring::new(vec![
            Point2::new(x, 0.0),
            Point2::new(x + 1.0, 0.0),
            Point2::new(x + 1.0, 3.0),
            Point2::new(x, 3.0),
        ])])
        .unwrap();
        let merged = union_touching(&[horiz(0.0), horiz(2.0), vert(0.0), vert(2.0)]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].holes.len(), 1);
        // 3x3 frame minus 1x1 middle.
        assert!((merged[0].area() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn union_empty_input() {
        assert!(union_touching(&[]).is_empty());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_square() -> impl Strategy<Value = PolygonWithHoles> {
            (0.0f64..20.0, 0.0f64..20.0, 0.5f64..3.0)
                .prop_map(|(x, y, s)| repair(&[square(x, y, s)]).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn union_area_bounds(polys in prop::collection::vec(arb_square(), 1..6)) {
                let max_in = polys.iter().map(|p| p.area()).fold(0.0, f64::max);
                let sum_in: f64 = polys.iter().map(|p| p.area()).sum();
                let out = union_touching(&polys);
                let total: f64 = out.iter().map(|p| p.area()).sum();
                prop_assert!(total >= max_in - 1e-6);
                prop_assert!(total <= sum_in + 1e-6);
            }

            #[test]
            fn union_disjoint_conserves_area(xs in prop::collection::vec(0usize..5, 1..5)) {
                // Squares on a coarse lattice with guaranteed gaps.
                let polys: Vec<PolygonWithHoles> = xs
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| repair(&[square(10.0 * x as f64, 30.0 * i as f64, 2.0)]).unwrap())
                    .collect();
                let sum_in: f64 = polys.iter().map(|p| p.area()).sum();
                let out = union_touching(&polys);
                let total: f64 = out.iter().map(|p| p.area()).sum();
                prop_assert!((total - sum_in).abs() / sum_in < 1e-6);
            }

            #[test]
            fn union_idempotent_prop(polys in prop::collection::vec(arb_square(), 1..5)) {
                let once = union_touching(&polys);
                let twice = union_touching(&once);
                prop_assert_eq!(once.len(), twice.len());
                let mut a1: Vec<f64> = once.iter().map(|p| p.area()).collect();
                let mut a2: Vec<f64> = twice.iter().map(|p| p.area()).collect();
                a1.sort_by(f64::total_cmp);
                a2.sort_by(f64::total_cmp);
                for (x, y) in a1.iter().zip(&a2) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }

            #[test]
            fn repair_idempotent_prop(x in -5.0f64..5.0, y in -5.0f64..5.0, s in 0.5f64..4.0) {
                let once = repair(&[square(x, y, s)]).unwrap();
                let rings: Vec<Ring> = once.rings().cloned().collect();
                let twice = repair(&rings).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
