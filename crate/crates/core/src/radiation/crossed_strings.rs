//! Hottel crossed-strings view factors in 2D.
//!
//! Unobstructed, the exchange between two segments is exact:
//! `F = (crossed string lengths − uncrossed string lengths) / (2 · emitter
//! length)`. When a blocker can shadow the exchange (it meets the convex hull
//! of the four endpoints), naive string wrapping is not physical — it can
//! raise F under partial occlusion — so the obstructed case integrates the
//! exact per-point angular view with visibility clipping over a fixed
//! Gauss–Legendre rule. Full occlusion yields exactly zero.

use crate::polygon::Point2;

use super::RadiationError;

/// View factor from `emitter` to `receiver` with opaque segment `blockers`.
pub fn crossed_strings_2d(
    emitter: (Point2, Point2),
    receiver: (Point2, Point2),
    blockers: &[(Point2, Point2)],
) -> Result<f64, RadiationError> {
    let len = emitter.0.dist(emitter.1);
    if len == 0.0 || receiver.0.dist(receiver.1) == 0.0 {
        return Err(RadiationError::DegenerateSegment);
    }
    if segments_cross(emitter.0, emitter.1, receiver.0, receiver.1) {
        return Err(RadiationError::IntersectingSegments);
    }
    let endpoints = [emitter.0, emitter.1, receiver.0, receiver.1];
    let relevant: Vec<(Point2, Point2)> = blockers
        .iter()
        .copied()
        .filter(|b| may_shadow(*b, &endpoints))
        .collect();
    if relevant.is_empty() {
        let d = |a: Point2, b: Point2| a.dist(b);
        // The crossed strings are the diagonals of the endpoint quadrilateral
        // (the larger pairing sum), whatever order the endpoints came in.
        let p1 = d(emitter.0, receiver.0) + d(emitter.1, receiver.1);
        let p2 = d(emitter.0, receiver.1) + d(emitter.1, receiver.0);
        let (crossed, uncrossed) = if p1 >= p2 { (p1, p2) } else { (p2, p1) };
        return Ok((crossed - uncrossed) / (2.0 * len));
    }
    Ok(integrate_visible(emitter, receiver, &relevant))
}

/// Can the blocker intersect any sight line? True iff it meets the convex
/// hull of the four endpoints.
fn may_shadow(blocker: (Point2, Point2), endpoints: &[Point2; 4]) -> bool {
    let hull = convex_hull(endpoints);
    if hull.len() < 3 {
        return true; // collinear configuration; stay conservative
    }
    let inside = |p: Point2| {
        let n = hull.len();
        (0..n).all(|i| orient(hull[i], hull[(i + 1) % n], p) >= -1e-12)
    };
    if inside(blocker.0) || inside(blocker.1) {
        return true;
    }
    let n = hull.len();
    (0..n).any(|i| segments_touch(hull[i], hull[(i + 1) % n], blocker.0, blocker.1))
}

fn convex_hull(points: &[Point2; 4]) -> Vec<Point2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// 8-point Gauss–Legendre abscissae/weights on [0, 1].
const GAUSS: [(f64, f64); 8] = [
    (0.01985507175123188, 0.05061426814518813),
    (0.10166676129318664, 0.11119051722668724),
    (0.2372337950418355, 0.15685332293894364),
    (0.40828267875217505, 0.18134189168918099),
    (0.5917173212478249, 0.18134189168918099),
    (0.7627662049581645, 0.15685332293894364),
    (0.8983332387068134, 0.11119051722668724),
    (0.9801449282487681, 0.05061426814518813),
];
const PANELS: usize = 16;

fn integrate_visible(
    emitter: (Point2, Point2),
    receiver: (Point2, Point2),
    blockers: &[(Point2, Point2)],
) -> f64 {
    let (e0, e1) = emitter;
    let len = e0.dist(e1);
    let tangent = Point2::new((e1.x - e0.x) / len, (e1.y - e0.y) / len);
    let mut normal = Point2::new(-tangent.y, tangent.x);
    // Radiate from the side facing the receiver.
    let em = Point2::new(0.5 * (e0.x + e1.x), 0.5 * (e0.y + e1.y));
    let rm = Point2::new(
        0.5 * (receiver.0.x + receiver.1.x),
        0.5 * (receiver.0.y + receiver.1.y),
    );
    if normal.x * (rm.x - em.x) + normal.y * (rm.y - em.y) < 0.0 {
        normal = Point2::new(-normal.x, -normal.y);
    }

    let mut f = 0.0;
    for panel in 0..PANELS {
        for (x, w) in GAUSS {
            let s = (panel as f64 + x) / PANELS as f64;
            let p = Point2::new(e0.x + s * (e1.x - e0.x), e0.y + s * (e1.y - e0.y));
            f += w / PANELS as f64 * point_view(p, normal, tangent, receiver, blockers);
        }
    }
    f.max(0.0)
}

/// Exact view factor from a differential strip element at `p` (with the given
/// normal) to the visible parts of the receiver: Σ ½|sin θ_b − sin θ_a|.
fn point_view(
    p: Point2,
    normal: Point2,
    tangent: Point2,
    receiver: (Point2, Point2),
    blockers: &[(Point2, Point2)],
) -> f64 {
    let (r0, r1) = receiver;
    let q = |t: f64| Point2::new(r0.x + t * (r1.x - r0.x), r0.y + t * (r1.y - r0.y));
    let height = |t: f64| {
        let qq = q(t);
        normal.x * (qq.x - p.x) + normal.y * (qq.y - p.y)
    };
    // Clip the receiver to the front half-plane of the element.
    let (h0, h1) = (height(0.0), height(1.0));
    let (mut t_lo, mut t_hi) = (0.0, 1.0);
    const EPS: f64 = 1e-12;
    match (h0 > EPS, h1 > EPS) {
        (false, false) => return 0.0,
        (true, true) => {}
        (true, false) => t_hi = h0 / (h0 - h1) - EPS,
        (false, true) => t_lo = h0 / (h0 - h1) + EPS,
    }
    if t_hi <= t_lo {
        return 0.0;
    }

    // Shadow boundaries: projections of blocker endpoints onto the receiver,
    // plus direct blocker/receiver crossings. Extra breakpoints are harmless.
    let mut breaks = vec![t_lo, t_hi];
    for &(u, v) in blockers {
        for w in [u, v] {
            if let Some(t) = line_param_on_receiver(p, w, r0, r1) {
                if t > t_lo && t < t_hi {
                    breaks.push(t);
                }
            }
        }
        if let Some(t) = segment_intersection_param(r0, r1, u, v) {
            if t > t_lo && t < t_hi {
                breaks.push(t);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);

    let sin_theta = |t: f64| {
        let qq = q(t);
        let dx = qq.x - p.x;
        let dy = qq.y - p.y;
        let d = (dx * dx + dy * dy).sqrt();
        (dx * tangent.x + dy * tangent.y) / d
    };
    let mut sum = 0.0;
    for pair in breaks.windows(2) {
        let (ta, tb) = (pair[0], pair[1]);
        if tb - ta < 1e-15 {
            continue;
        }
        let tm = 0.5 * (ta + tb);
        let qm = q(tm);
        if height(tm) <= 0.0 {
            continue;
        }
        let shadowed = blockers
            .iter()
            .any(|&(u, v)| segments_cross(p, qm, u, v));
        if !shadowed {
            sum += 0.5 * (sin_theta(tb) - sin_theta(ta)).abs();
        }
    }
    sum
}

/// Parameter t where the line through (p, w) meets the receiver segment.
fn line_param_on_receiver(p: Point2, w: Point2, r0: Point2, r1: Point2) -> Option<f64> {
    let d = Point2::new(w.x - p.x, w.y - p.y);
    let r = Point2::new(r1.x - r0.x, r1.y - r0.y);
    let denom = d.x * r.y - d.y * r.x;
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = ((p.y - r0.y) * d.x - (p.x - r0.x) * d.y) / denom;
    (0.0..=1.0).contains(&t).then_some(t)
}

/// Parameter on (r0, r1) where it properly crosses (u, v).
fn segment_intersection_param(r0: Point2, r1: Point2, u: Point2, v: Point2) -> Option<f64> {
    let r = Point2::new(r1.x - r0.x, r1.y - r0.y);
    let s = Point2::new(v.x - u.x, v.y - u.y);
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = ((u.x - r0.x) * s.y - (u.y - r0.y) * s.x) / denom;
    let w = ((u.x - r0.x) * r.y - (u.y - r0.y) * r.x) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&w)).then_some(t)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Proper (interior) crossing test.
fn segments_cross(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Closed intersection test including collinear touch.
fn segments_touch(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> bool {
    if segments_cross(p1, p2, p3, p4) {
        return true;
    }
    let on = |a: Point2, b: Point2, p: Point2| {
        orient(a, b, p) == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(p1, p2, p3) || on(p1, p2, p4) || on(p3, p4, p1) || on(p3, p4, p2)
}
