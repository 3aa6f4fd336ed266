//! Ear-clipping triangulation with hole bridging.
//!
//! Holes are connected to the outer ring by bridge edges (each hole's
//! rightmost vertex to a visible vertex of the partially-built ring), turning
//! the polygon into one simple ring that is then ear-clipped. Bridge edges
//! appear twice with opposite directions, so the cap stays watertight when
//! triangles are indexed against the original vertex list.

use crate::polygon::{PolygonWithHoles, Point2, Ring};

use super::MeshError;

const AREA_EPS: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Node {
    /// Index into the flat vertex list (duplicates allowed for bridges).
    vert: usize,
    prev: usize,
    next: usize,
}

/// Triangulate a repaired polygon. Returns the flat vertex list
/// (outer ring first, then holes in order) and CCW triangles indexing it.
pub fn triangulate_polygon(
    poly: &PolygonWithHoles,
) -> Result<(Vec<Point2>, Vec<[usize; 3]>), MeshError> {
    let mut pts: Vec<Point2> = poly.outer.vertices.clone();
    let mut hole_ranges: Vec<std::ops::Range<usize>> = Vec::new();
    for hole in &poly.holes {
        let start = pts.len();
        pts.extend_from_slice(&hole.vertices);
        hole_ranges.push(start..pts.len());
    }

    // Circular doubly-linked list over the outer ring.
    let mut nodes: Vec<Node> = Vec::with_capacity(pts.len() + 2 * hole_ranges.len());
    let n_outer = poly.outer.vertices.len();
    for i in 0..n_outer {
        nodes.push(Node {
            vert: i,
            prev: (i + n_outer - 1) % n_outer,
            next: (i + 1) % n_outer,
        });
    }

    // Splice holes rightmost-first so later bridges cannot cross earlier ones.
    let mut order: Vec<usize> = (0..hole_ranges.len()).collect();
    let max_x = |r: &std::ops::Range<usize>| {
        pts[r.clone()].iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)
    };
    order.sort_by(|&a, &b| max_x(&hole_ranges[b]).total_cmp(&max_x(&hole_ranges[a])));
    for h in order {
        splice_hole(&mut nodes, &pts, poly, hole_ranges[h].clone())?;
    }

    clip_ears(&nodes, &pts).map(|tris| (pts, tris))
}

fn splice_hole(
    nodes: &mut Vec<Node>,
    pts: &[Point2],
    poly: &PolygonWithHoles,
    hole: std::ops::Range<usize>,
) -> Result<(), MeshError> {
    // Hole vertex with maximum x (rightmost) is the bridge start.
    let m_vert = hole
        .clone()
        .max_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x))
        .expect("holes are non-empty");
    let m = pts[m_vert];

    // Candidate bridge targets: current ring nodes, nearest first, connected
    // by a segment that stays inside the polygon and crosses no ring edge.
    let mut candidates: Vec<usize> = (0..nodes.len()).collect();
    candidates.sort_by(|&a, &b| {
        m.dist(pts[nodes[a].vert]).total_cmp(&m.dist(pts[nodes[b].vert]))
    });
    let target = candidates.into_iter().find(|&cand| {
        let v = pts[nodes[cand].vert];
        if v.dist(m) == 0.0 {
            return false;
        }
        let mid = Point2::new(0.5 * (m.x + v.x), 0.5 * (m.y + v.y));
        poly.contains_point(mid) && !bridge_blocked(nodes, pts, m, v) && !hole_blocked(poly, m, v)
    });
    let Some(target) = target else {
        return Err(MeshError::Triangulation {
            vertices: pts.len(),
            ring: poly.outer.vertices.iter().map(|p| (p.x, p.y)).collect(),
        });
    };

    // Build hole nodes (following the hole's own CW order keeps the combined
    // ring CCW) and the two bridge duplicates.
    let hole_len = hole.len();
    let first_hole_node = nodes.len();
    let m_offset = m_vert - hole.start;
    for k in 0..hole_len {
        let vert = hole.start + (m_offset + k) % hole_len;
        let id = nodes.len();
        nodes.push(Node { vert, prev: id - 1, next: id + 1 });
    }
    let m_dup = nodes.len();
    nodes.push(Node { vert: m_vert, prev: m_dup - 1, next: 0 });
    let v_dup = nodes.len();
    let t_next = nodes[target].next;
    nodes.push(Node { vert: nodes[target].vert, prev: m_dup, next: t_next });

    // Stitch: target -> hole(M..) -> M' -> V' -> target.next
    nodes[target].next = first_hole_node;
    nodes[first_hole_node].prev = target;
    nodes[m_dup].next = v_dup;
    nodes[t_next].prev = v_dup;
    Ok(())
}

/// Does segment (m, v) properly cross any edge of the current ring?
fn bridge_blocked(nodes: &[Node], pts: &[Point2], m: Point2, v: Point2) -> bool {
    nodes.iter().any(|node| {
        let a = pts[node.vert];
        let b = pts[nodes[node.next].vert];
        segments_cross_properly(m, v, a, b)
    })
}

/// Does segment (m, v) properly cross any original ring of the polygon?
/// Guards against bridges cutting through holes not yet spliced in.
fn hole_blocked(poly: &PolygonWithHoles, m: Point2, v: Point2) -> bool {
    poly.rings().any(|ring: &Ring| {
        ring.edges().any(|(a, b)| segments_cross_properly(m, v, a, b))
    })
}

/// Strict interior crossing; shared endpoints do not count.
fn segments_cross_properly(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> bool {
    let shares_endpoint =
        p1 == p3 || p1 == p4 || p2 == p3 || p2 == p4;
    if shares_endpoint {
        return false;
    }
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn clip_ears(nodes: &[Node], pts: &[Point2]) -> Result<Vec<[usize; 3]>, MeshError> {
    let mut prev: Vec<usize> = nodes.iter().map(|n| n.prev).collect();
    let mut next: Vec<usize> = nodes.iter().map(|n| n.next).collect();
    let mut alive = nodes.len();
    let mut tris = Vec::with_capacity(alive.saturating_sub(2));
    let mut cur = 0usize;
    let mut since_last_clip = 0usize;

    while alive > 3 {
        let (p, nx) = (prev[cur], next[cur]);
        let (a, b, c) = (pts[nodes[p].vert], pts[nodes[cur].vert], pts[nodes[nx].vert]);
        let area2 = orient(a, b, c);
        let mut clipped = false;
        if area2.abs() <= AREA_EPS {
            // Degenerate corner (collinear bridge); drop without a triangle.
            clipped = true;
        } else if area2 > 0.0 && no_node_inside(&next, nodes, pts, cur, a, b, c) {
            tris.push([nodes[p].vert, nodes[cur].vert, nodes[nx].vert]);
            clipped = true;
        }
        if clipped {
            next[p] = nx;
            prev[nx] = p;
            alive -= 1;
            cur = nx;
            since_last_clip = 0;
        } else {
            cur = nx;
            since_last_clip += 1;
            if since_last_clip > alive {
                return Err(MeshError::Triangulation {
                    vertices: pts.len(),
                    ring: pts.iter().map(|p| (p.x, p.y)).collect(),
                });
            }
        }
    }
    // Final triangle.
    let (p, nx) = (prev[cur], next[cur]);
    let (a, b, c) = (pts[nodes[p].vert], pts[nodes[cur].vert], pts[nodes[nx].vert]);
    if orient(a, b, c) > AREA_EPS {
        tris.push([nodes[p].vert, nodes[cur].vert, nodes[nx].vert]);
    }
    Ok(tris)
}

/// No remaining node lies strictly inside or on the candidate ear, corners
/// excepted (bridge duplicates share coordinates with corners).
fn no_node_inside(
    next: &[usize],
    nodes: &[Node],
    pts: &[Point2],
    ear: usize,
    a: Point2,
    b: Point2,
    c: Point2,
) -> bool {
    let start = next[ear];
    let mut i = start;
    loop {
        let p = pts[nodes[i].vert];
        i = next[i];
        let at_corner = p == a || p == b || p == c;
        if !at_corner && point_in_triangle(p, a, b, c) {
            return false;
        }
        if i == start {
            return true;
        }
    }
}

fn point_in_triangle(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    let d1 = orient(a, b, p);
    let d2 = orient(b, c, p);
    let d3 = orient(c, a, p);
    d1 >= -AREA_EPS && d2 >= -AREA_EPS && d3 >= -AREA_EPS
}

/// Sum of triangle areas; used by tests to check coverage.
#[cfg(test)]
pub(crate) fn triangulation_area(pts: &[Point2], tris: &[[usize; 3]]) -> f64 {
    tris.iter()
        .map(|t| 0.5 * orient(pts[t[0]], pts[t[1]], pts[t[2]]))
        .sum()
}
