//! Workload partitioning: weighted buildings to workers (Case 0), plus
//! nearest-building assignment of environment cells (Case 1).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::mesh::{Scene, TriMesh};
use crate::polygon::signed_area;

/// Assignment of buildings (and optionally terrain cells) to parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub n_parts: usize,
    /// Building id → part index.
    pub assignment: BTreeMap<String, usize>,
    /// Building weight per part.
    pub loads: Vec<u64>,
    /// Terrain-cell (triangle) → part index; Case 1 only.
    pub env_assignment: Option<Vec<usize>>,
    /// Terrain cells per part; reported, not balanced.
    pub env_loads: Option<Vec<u64>>,
}

impl PartitionPlan {
    /// Building ids of one part, sorted.
    pub fn part_members(&self, part: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &p)| p == part)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

/// Per-building weight: triangle count of the building mesh, a proxy for
/// meshing and simulation cost.
pub fn weights(scene: &Scene) -> BTreeMap<String, u64> {
    scene
        .building_ids()
        .map(|id| {
            let range = scene.building_range(id).expect("listed building has a range");
            (id.to_string(), range.len() as u64)
        })
        .collect()
}

/// Longest-processing-time greedy: weights descending (ties by ascending id),
/// each to the currently least-loaded part (ties by lowest index).
pub fn partition_case0(weights: &BTreeMap<String, u64>, n_parts: usize) -> PartitionPlan {
    assert!(n_parts >= 1, "need at least one part");
    let mut order: Vec<(&String, &u64)> = weights.iter().collect();
    order.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let mut loads = vec![0u64; n_parts];
    let mut assignment = BTreeMap::new();
    for (id, &w) in order {
        let part = loads
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .expect("n_parts >= 1");
        loads[part] += w;
        assignment.insert(id.clone(), part);
    }
    PartitionPlan { n_parts, assignment, loads, env_assignment: None, env_loads: None }
}

/// Extend a Case-0 plan: every terrain cell follows the part owning the
/// nearest building centroid (plan-view Euclidean, ties by lowest part).
pub fn partition_case1(plan: &PartitionPlan, scene: &Scene, terrain: &TriMesh) -> PartitionPlan {
    let centroids: Vec<(f64, f64, usize)> = scene
        .buildings
        .iter()
        .filter_map(|b| {
            let part = *plan.assignment.get(&b.id)?;
            let (cx, cy) = footprint_centroid(&b.footprint.outer);
            Some((cx, cy, part))
        })
        .collect();
    let mut env_assignment = Vec::with_capacity(terrain.len());
    let mut env_loads = vec![0u64; plan.n_parts];
    for t in 0..terrain.len() {
        let [a, b, c] = terrain.triangle_vertices(t);
        let cx = (a[0] + b[0] + c[0]) / 3.0;
        let cy = (a[1] + b[1] + c[1]) / 3.0;
        let part = centroids
            .iter()
            .map(|&(x, y, p)| (((x - cx).powi(2) + (y - cy).powi(2)), p))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, p)| p)
            .unwrap_or(0);
        env_assignment.push(part);
        env_loads[part] += 1;
    }
    PartitionPlan {
        env_assignment: Some(env_assignment),
        env_loads: Some(env_loads),
        ..plan.clone()
    }
}

fn footprint_centroid(ring: &crate::polygon::Ring) -> (f64, f64) {
    let a = signed_area(ring);
    if a.abs() < 1e-12 {
        let n = ring.vertices.len() as f64;
        let (sx, sy) = ring
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), v| (sx + v.x, sy + v.y));
        return (sx / n, sy / n);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for (p, q) in ring.edges() {
        let w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    (cx / (6.0 * a), cy / (6.0 * a))
}

/// Max part load over mean part load; 1.0 is perfectly balanced.
pub fn imbalance(plan: &PartitionPlan) -> f64 {
    let total: u64 = plan.loads.iter().sum();
    assert!(total > 0, "imbalance undefined for zero total weight");
    let mean = total as f64 / plan.n_parts as f64;
    let max = *plan.loads.iter().max().expect("n_parts >= 1") as f64;
    max / mean
}

/// JSON export: part → building id list plus load summary.
pub fn plan_to_json(plan: &PartitionPlan) -> serde_json::Value {
    let parts: Vec<serde_json::Value> = (0..plan.n_parts)
        .map(|p| {
            let mut obj = serde_json::json!({
                "part": p,
                "load": plan.loads[p],
                "buildings": plan.part_members(p),
            });
            if let Some(env) = &plan.env_loads {
                obj["env_cells"] = serde_json::json!(env[p]);
            }
            obj
        })
        .collect();
    serde_json::json!({
        "schema_version": 1,
        "n_parts": plan.n_parts,
        "imbalance": imbalance(plan),
        "parts": parts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TileIndex;
    use crate::mesh::{build_scene, rect_footprint, BuildingModel, Lod, TileContent};
    use crate::polygon::{repair, Point2, Ring};

    fn weights_of(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// Exhaustive optimum makespan with branch-and-bound.
    fn brute_force_optimum(weights: &[u64], n_parts: usize) -> u64 {
        fn rec(weights: &[u64], loads: &mut Vec<u64>, i: usize, best: &mut u64) {
            if i == weights.len() {
                let make = *loads.iter().max().unwrap();
                *best = (*best).min(make);
                return;
            }
            for p in 0..loads.len() {
                if loads[p] + weights[i] >= *best {
                    continue;
                }
                // Symmetry: skip identical empty parts beyond the first.
                if p > 0 && loads[p] == loads[p - 1] {
                    continue;
                }
                loads[p] += weights[i];
                rec(weights, loads, i + 1, best);
                loads[p] -= weights[i];
            }
        }
        let mut sorted: Vec<u64> = weights.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let mut best = sorted.iter().sum::<u64>();
        rec(&sorted, &mut vec![0; n_parts], 0, &mut best);
        best
    }

    fn star_building(id: &str, n: usize) -> BuildingModel {
        let verts: Vec<Point2> = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Point2::new(10.0 * t.cos(), 10.0 * t.sin())
            })
            .collect();
        BuildingModel {
            id: id.into(),
            footprint: repair(&[Ring::new(verts)]).unwrap(),
            base_z: 0.0,
            height_m: 6.0,
            lod: Lod::Lod1,
        }
    }

    #[test]
    fn weight_is_triangle_count() {
        let scene = build_scene(&[TileContent {
            tile: TileIndex::new(0, 0, 0),
            buildings: vec![BuildingModel {
                id: "sq".into(),
                footprint: rect_footprint(0.0, 0.0, 1.0, 1.0),
                base_z: 0.0,
                height_m: 3.0,
                lod: Lod::Lod1,
            }],
        }])
        .unwrap();
        // Unit square LOD-1: 8 wall + 4 cap triangles.
        assert_eq!(weights(&scene)["sq"], 12);
    }

    #[test]
    fn identical_buildings_identical_weights() {
        let scene = build_scene(&[TileContent {
            tile: TileIndex::new(0, 0, 0),
            buildings: vec![
                BuildingModel {
                    id: "a".into(),
                    footprint: rect_footprint(0.0, 0.0, 2.0, 1.0),
                    base_z: 0.0,
                    height_m: 3.0,
                    lod: Lod::Lod1,
                },
                BuildingModel {
                    id: "b".into(),
                    footprint: rect_footprint(10.0, 0.0, 2.0, 1.0),
                    base_z: 0.0,
                    height_m: 3.0,
                    lod: Lod::Lod1,
                },
            ],
        }])
        .unwrap();
        let w = weights(&scene);
        assert_eq!(w["a"], w["b"]);
    }

    #[test]
    fn weight_grows_with_vertex_count() {
        // Triangulation size vs ring size on a vertex-count sweep.
        let mut prev = 0;
        for n in [4usize, 6, 8, 10, 12, 16] {
            let scene = build_scene(&[TileContent {
                tile: TileIndex::new(0, 0, 0),
                buildings: vec![star_building("s", n)],
            }])
            .unwrap();
            let w = weights(&scene)["s"];
            assert!(w > prev, "n={n}: {w} <= {prev}");
            prev = w;
        }
    }

    #[test]
    fn lpt_worked_example() {
        // {5,4,3,3,3} on 2 parts: LPT gives {8,10}; the optimum is {9,9}.
        let w = weights_of(&[("a", 5), ("b", 4), ("c", 3), ("d", 3), ("e", 3)]);
        let plan = partition_case0(&w, 2);
        let mut loads = plan.loads.clone();
        loads.sort_unstable();
        assert_eq!(loads, vec![8, 10]);
        assert!((imbalance(&plan) - 10.0 / 9.0).abs() < 1e-12);
        assert_eq!(brute_force_optimum(&[5, 4, 3, 3, 3], 2), 9);
    }

    #[test]
    fn single_part_takes_everything() {
        let w = weights_of(&[("a", 5), ("b", 4)]);
        let plan = partition_case0(&w, 1);
        assert_eq!(plan.loads, vec![9]);
        assert!(plan.assignment.values().all(|&p| p == 0));
        assert_eq!(imbalance(&plan), 1.0);
    }

    #[test]
    fn more_parts_than_items_leaves_empty_parts() {
        let w = weights_of(&[("a", 5)]);
        let plan = partition_case0(&w, 4);
        assert_eq!(plan.loads.iter().filter(|&&l| l == 0).count(), 3);
    }

    #[test]
    fn equal_weights_balance_perfectly() {
        let w = weights_of(&[("a", 7), ("b", 7), ("c", 7), ("d", 7)]);
        let plan = partition_case0(&w, 2);
        assert_eq!(imbalance(&plan), 1.0);
    }

    #[test]
    fn completeness_and_determinism() {
        let w = weights_of(&[("a", 12), ("b", 8), ("c", 20), ("d", 14), ("e", 3)]);
        let p1 = partition_case0(&w, 3);
        let p2 = partition_case0(&w, 3);
        assert_eq!(p1, p2);
        assert_eq!(p1.loads.iter().sum::<u64>(), 57);
    }

    #[test]
    fn lpt_meets_worst_case_bound_vs_exhaustive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for case in 0..220 {
            let n_items = rng.gen_range(1..=12);
            let n_parts = rng.gen_range(1..=3usize);
            let ws: Vec<u64> = (0..n_items).map(|_| rng.gen_range(1..=40)).collect();
            let map: BTreeMap<String, u64> = ws
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("b{i:02}"), w))
                .collect();
            let plan = partition_case0(&map, n_parts);
            let makespan = *plan.loads.iter().max().unwrap();
            let optimum = brute_force_optimum(&ws, n_parts);
            let bound = (4.0 / 3.0 - 1.0 / (3.0 * n_parts as f64)) * optimum as f64;
            assert!(
                makespan as f64 <= bound + 1e-9,
                "case {case}: makespan {makespan} > bound {bound} (opt {optimum}, ws {ws:?})"
            );
        }
    }

    fn two_building_scene() -> Scene {
        build_scene(&[TileContent {
            tile: TileIndex::new(0, 0, 0),
            buildings: vec![
                BuildingModel {
                    id: "west".into(),
                    footprint: rect_footprint(-1.0, -1.0, 2.0, 2.0),
                    base_z: 0.0,
                    height_m: 5.0,
                    lod: Lod::Lod1,
                },
                BuildingModel {
                    id: "east".into(),
                    footprint: rect_footprint(99.0, -1.0, 2.0, 2.0),
                    base_z: 0.0,
                    height_m: 5.0,
                    lod: Lod::Lod1,
                },
            ],
        }])
        .unwrap()
    }

    fn flat_terrain(x0: f64, x1: f64) -> TriMesh {
        use crate::mesh::{FaceTag, MeshBuilder};
        let mut mb = MeshBuilder::new();
        let step = 5.0;
        let mut x = x0;
        while x < x1 {
            for y in [-10.0, -5.0, 0.0, 5.0] {
                mb.triangle([x, y, 0.0], [x + step, y, 0.0], [x + step, y + step, 0.0], FaceTag::Terrain, 0);
                mb.triangle([x, y, 0.0], [x + step, y + step, 0.0], [x, y + step, 0.0], FaceTag::Terrain, 0);
            }
            x += step;
        }
        mb.finish()
    }

    #[test]
    fn terrain_splits_at_bisector() {
        let scene = two_building_scene();
        let terrain = flat_terrain(-10.0, 110.0);
        let w = weights(&scene);
        let case0 = partition_case0(&w, 2);
        let plan = partition_case1(&case0, &scene, &terrain);
        let env = plan.env_assignment.as_ref().unwrap();
        let west_part = plan.assignment["west"];
        let east_part = plan.assignment["east"];
        for t in 0..terrain.len() {
            let [a, b, c] = terrain.triangle_vertices(t);
            let cx = (a[0] + b[0] + c[0]) / 3.0;
            let want = if cx < 50.0 { west_part } else { east_part };
            assert_eq!(env[t], want, "cell at x={cx}");
        }
        let loads = plan.env_loads.as_ref().unwrap();
        assert_eq!(loads.iter().sum::<u64>() as usize, terrain.len());
    }

    #[test]
    fn single_building_takes_all_terrain() {
        let scene = build_scene(&[TileContent {
            tile: TileIndex::new(0, 0, 0),
            buildings: vec![BuildingModel {
                id: "only".into(),
                footprint: rect_footprint(0.0, 0.0, 2.0, 2.0),
                base_z: 0.0,
                height_m: 5.0,
                lod: Lod::Lod1,
            }],
        }])
        .unwrap();
        let terrain = flat_terrain(-10.0, 50.0);
        let plan = partition_case1(&partition_case0(&weights(&scene), 2), &scene, &terrain);
        let part = plan.assignment["only"];
        assert!(plan.env_assignment.unwrap().iter().all(|&p| p == part));
    }

    #[test]
    fn random_layout_matches_nearest_neighbor_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let buildings: Vec<BuildingModel> = (0..8)
            .map(|i| BuildingModel {
                id: format!("b{i}"),
                footprint: rect_footprint(
                    (rng.gen_range(0..20) * 10) as f64,
                    (rng.gen_range(0..20) * 10) as f64,
                    2.0,
                    2.0,
                ),
                base_z: 0.0,
                height_m: 5.0,
                lod: Lod::Lod1,
            })
            .collect();
        let scene = build_scene(&[TileContent {
            tile: TileIndex::new(0, 0, 0),
            buildings,
        }])
        .unwrap();
        let terrain = flat_terrain(0.0, 200.0);
        let plan = partition_case1(&partition_case0(&weights(&scene), 3), &scene, &terrain);
        let env = plan.env_assignment.as_ref().unwrap();
        // Brute-force nearest centroid per cell.
        let centroids: Vec<(f64, f64, usize)> = scene
            .buildings
            .iter()
            .map(|b| {
                let (lo, hi) = b.footprint.bbox();
                (
                    0.5 * (lo.x + hi.x),
                    0.5 * (lo.y + hi.y),
                    plan.assignment[&b.id],
                )
            })
            .collect();
        for t in 0..terrain.len() {
            let [a, b, c] = terrain.triangle_vertices(t);
            let (cx, cy) = ((a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0);
            let best = centroids
                .iter()
                .map(|&(x, y, p)| ((x - cx).powi(2) + (y - cy).powi(2), p))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap()
                .1;
            assert_eq!(env[t], best);
        }
    }

    #[test]
    fn json_export_shape() {
        let w = weights_of(&[("a", 5), ("b", 4), ("c", 3)]);
        let plan = partition_case0(&w, 2);
        let doc = plan_to_json(&plan);
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["n_parts"], 2);
        assert_eq!(doc["parts"].as_array().unwrap().len(), 2);
    }
}
