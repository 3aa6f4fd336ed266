//! Median-split bounding volume hierarchy over scene triangles.
//!
//! Query results are identical to brute-force triangle iteration; the tree
//! only prunes work. Leaves hold at most four triangles.

use crate::mesh::TriMesh;

/// Default minimum hit distance; avoids re-hitting the emitting surface.
pub const DEFAULT_T_MIN: f64 = 1e-4;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: [f64; 3],
    pub dir: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: usize,
}

#[derive(Debug, Clone)]
struct Node {
    bb_min: [f64; 3],
    bb_max: [f64; 3],
    /// Leaf: range into `order`. Internal: `start` is the left child index,
    /// `count` is zero (right child is `start + 1`'s sibling stored at
    /// `right`).
    start: u32,
    count: u32,
    right: u32,
}

pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle indices, partitioned by the build.
    order: Vec<u32>,
    /// Flat copy of triangle vertices in `order` for cache-friendly tests.
    tris: Vec<[[f64; 3]; 3]>,
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Bvh {
        assert!(!mesh.is_empty(), "cannot build a BVH over an empty mesh");
        let n = mesh.len();
        let centroids: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let [a, b, c] = mesh.triangle_vertices(i);
                [
                    (a[0] + b[0] + c[0]) / 3.0,
                    (a[1] + b[1] + c[1]) / 3.0,
                    (a[2] + b[2] + c[2]) / 3.0,
                ]
            })
            .collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_node(mesh, &centroids, &mut order, 0, n, &mut nodes);
        let tris = order
            .iter()
            .map(|&t| mesh.triangle_vertices(t as usize))
            .collect();
        Bvh { nodes, order, tris }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nearest hit with `t > t_min` among triangles accepted by `filter`.
    /// Returns the hit and the number of ray-triangle tests performed.
    pub fn nearest_hit_where<F: Fn(usize) -> bool>(
        &self,
        ray: &Ray,
        t_min: f64,
        filter: F,
    ) -> (Option<Hit>, usize) {
        let inv = inv_dir(ray.dir);
        let mut best: Option<Hit> = None;
        let mut tests = 0usize;
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let limit = best.map_or(f64::INFINITY, |h| h.t);
            if slab_test(ray.origin, inv, node.bb_min, node.bb_max, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                for k in node.start..node.start + node.count {
                    let tri = self.order[k as usize] as usize;
                    if !filter(tri) {
                        continue;
                    }
                    tests += 1;
                    let [a, b, c] = self.tris[k as usize];
                    if let Some(t) = ray_triangle(ray, a, b, c, t_min) {
                        if best.map_or(true, |h| t < h.t) {
                            best = Some(Hit { t, triangle: tri });
                        }
                    }
                }
            } else {
                // Push the farther child last so the nearer one pops first.
                let (l, r) = (node.start, node.right);
                let dl = child_entry(self, l, ray.origin, inv, limit);
                let dr = child_entry(self, r, ray.origin, inv, limit);
                match (dl, dr) {
                    (Some(a), Some(b)) if a <= b => {
                        stack.push(r);
                        stack.push(l);
                    }
                    (Some(_), Some(_)) => {
                        stack.push(l);
                        stack.push(r);
                    }
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        (best, tests)
    }

    /// First accepted hit with `t > t_min`; early-out, order unspecified.
    pub fn any_hit_where<F: Fn(usize) -> bool>(&self, ray: &Ray, t_min: f64, filter: F) -> bool {
        let inv = inv_dir(ray.dir);
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if slab_test(ray.origin, inv, node.bb_min, node.bb_max, f64::INFINITY).is_none() {
                continue;
            }
            if node.count > 0 {
                for k in node.start..node.start + node.count {
                    let tri = self.order[k as usize] as usize;
                    if !filter(tri) {
                        continue;
                    }
                    let [a, b, c] = self.tris[k as usize];
                    if ray_triangle(ray, a, b, c, t_min).is_some() {
                        return true;
                    }
                }
            } else {
                stack.push(node.start);
                stack.push(node.right);
            }
        }
        false
    }
}

/// Nearest hit over the whole scene (see [`Bvh::nearest_hit_where`]).
pub fn ray_hit(bvh: &Bvh, origin: [f64; 3], dir: [f64; 3], t_min: f64) -> Option<Hit> {
    assert!(dir != [0.0; 3], "ray direction must be non-zero");
    bvh.nearest_hit_where(&Ray { origin, dir }, t_min, |_| true).0
}

fn child_entry(bvh: &Bvh, node: u32, origin: [f64; 3], inv: [f64; 3], limit: f64) -> Option<f64> {
    let n = &bvh.nodes[node as usize];
    slab_test(origin, inv, n.bb_min, n.bb_max, limit)
}

fn build_node(
    mesh: &TriMesh,
    centroids: &[[f64; 3]],
    order: &mut [u32],
    start: usize,
    count: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let slice = &order[start..start + count];
    let mut bb_min = [f64::INFINITY; 3];
    let mut bb_max = [f64::NEG_INFINITY; 3];
    for &t in slice {
        let [a, b, c] = mesh.triangle_vertices(t as usize);
        for v in [a, b, c] {
            for k in 0..3 {
                bb_min[k] = bb_min[k].min(v[k]);
                bb_max[k] = bb_max[k].max(v[k]);
            }
        }
    }
    let idx = nodes.len() as u32;
    nodes.push(Node { bb_min, bb_max, start: start as u32, count: count as u32, right: 0 });
    if count <= LEAF_SIZE {
        return idx;
    }
    // Median split along the widest centroid axis.
    let mut c_min = [f64::INFINITY; 3];
    let mut c_max = [f64::NEG_INFINITY; 3];
    for &t in order[start..start + count].iter() {
        for k in 0..3 {
            c_min[k] = c_min[k].min(centroids[t as usize][k]);
            c_max[k] = c_max[k].max(centroids[t as usize][k]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (c_max[a] - c_min[a]).total_cmp(&(c_max[b] - c_min[b])))
        .unwrap();
    if c_max[axis] - c_min[axis] <= 0.0 {
        return idx; // coincident centroids: keep an oversized leaf
    }
    let mid = count / 2;
    order[start..start + count]
        .select_nth_unstable_by(mid, |&a, &b| {
            centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
        });
    let left = build_node(mesh, centroids, order, start, mid, nodes);
    let right = build_node(mesh, centroids, order, start + mid, count - mid, nodes);
    nodes[idx as usize].start = left;
    nodes[idx as usize].count = 0;
    nodes[idx as usize].right = right;
    idx
}

fn inv_dir(dir: [f64; 3]) -> [f64; 3] {
    [1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]]
}

/// Slab test; entry distance if the box is hit before `limit`.
fn slab_test(
    origin: [f64; 3],
    inv: [f64; 3],
    bb_min: [f64; 3],
    bb_max: [f64; 3],
    limit: f64,
) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = limit;
    for k in 0..3 {
        let a = (bb_min[k] - origin[k]) * inv[k];
        let b = (bb_max[k] - origin[k]) * inv[k];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo.is_nan() || hi.is_nan() {
            continue; // origin exactly on a slab with zero direction
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return None;
        }
    }
    Some(t0)
}

/// Möller–Trumbore intersection; `t > t_min` required.
fn ray_triangle(ray: &Ray, a: [f64; 3], b: [f64; 3], c: [f64; 3], t_min: f64) -> Option<f64> {
    let e1 = sub(b, a);
    let e2 = sub(c, a);
    let p = cross(ray.dir, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = sub(ray.origin, a);
    let u = dot(s, p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = cross(s, e1);
    let v = dot(ray.dir, q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = dot(e2, q) * inv_det;
    (t > t_min).then_some(t)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
