//! Parametric tree meshes: a unit-height reference template scaled and
//! translated per instance.

use super::{FaceTag, MeshBuilder, TriMesh};

/// Built-in species shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeTemplate {
    /// Cylinder trunk with a cone crown.
    Conifer,
    /// Cylinder trunk with an ellipsoid crown.
    Broadleaf,
}

const SEGMENTS: usize = 6;
const TRUNK_RADIUS: f64 = 0.06;
const TRUNK_TOP: f64 = 0.35;
const CROWN_BASE: f64 = 0.30;
const CONE_RADIUS: f64 = 0.28;
const ELLIPSOID_CENTER: f64 = 0.65;
const ELLIPSOID_RX: f64 = 0.30;
const ELLIPSOID_RZ: f64 = 0.35;

/// Facet id of the trunk in a tree mesh.
pub const TREE_TRUNK_FACET: u32 = 0;
/// Facet id of the crown in a tree mesh.
pub const TREE_CROWN_FACET: u32 = 1;

/// Instance a tree at `position` with total height `height_m`.
///
/// The affine transform is a uniform scale by height plus translation, so
/// crown volume scales with height³.
pub fn tree_mesh(position: [f64; 3], height_m: f64, template: TreeTemplate) -> TriMesh {
    assert!(height_m > 0.0, "tree height must be positive");
    let mut mesh = unit_template(template);
    for v in &mut mesh.vertices {
        for k in 0..3 {
            v[k] = v[k] * height_m + position[k];
        }
    }
    mesh
}

fn unit_template(template: TreeTemplate) -> TriMesh {
    let mut mb = MeshBuilder::new();
    closed_cylinder(&mut mb, TRUNK_RADIUS, 0.0, TRUNK_TOP, TREE_TRUNK_FACET);
    match template {
        TreeTemplate::Conifer => cone(&mut mb, CONE_RADIUS, CROWN_BASE, 1.0, TREE_CROWN_FACET),
        TreeTemplate::Broadleaf => ellipsoid(
            &mut mb,
            ELLIPSOID_RX,
            ELLIPSOID_RZ,
            ELLIPSOID_CENTER,
            TREE_CROWN_FACET,
        ),
    }
    mb.finish()
}

fn rim(radius: f64, z: f64) -> Vec<[f64; 3]> {
    (0..SEGMENTS)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / SEGMENTS as f64;
            [radius * t.cos(), radius * t.sin(), z]
        })
        .collect()
}

fn fan(mb: &mut MeshBuilder, center: [f64; 3], rim: &[[f64; 3]], up: bool, facet: u32) {
    for i in 0..rim.len() {
        let a = rim[i];
        let b = rim[(i + 1) % rim.len()];
        if up {
            mb.triangle(center, a, b, FaceTag::Tree, facet);
        } else {
            mb.triangle(center, b, a, FaceTag::Tree, facet);
        }
    }
}

fn band(mb: &mut MeshBuilder, lower: &[[f64; 3]], upper: &[[f64; 3]], facet: u32) {
    for i in 0..lower.len() {
        let j = (i + 1) % lower.len();
        mb.triangle(lower[i], lower[j], upper[j], FaceTag::Tree, facet);
        mb.triangle(lower[i], upper[j], upper[i], FaceTag::Tree, facet);
    }
}

fn closed_cylinder(mb: &mut MeshBuilder, radius: f64, z0: f64, z1: f64, facet: u32) {
    let bottom = rim(radius, z0);
    let top = rim(radius, z1);
    band(mb, &bottom, &top, facet);
    fan(mb, [0.0, 0.0, z0], &bottom, false, facet);
    fan(mb, [0.0, 0.0, z1], &top, true, facet);
}

fn cone(mb: &mut MeshBuilder, radius: f64, z0: f64, apex_z: f64, facet: u32) {
    let base = rim(radius, z0);
    // Apex above the rim: CCW order keeps the lateral normals outward.
    fan(mb, [0.0, 0.0, apex_z], &base, true, facet);
    fan(mb, [0.0, 0.0, z0], &base, false, facet);
}

fn ellipsoid(mb: &mut MeshBuilder, rx: f64, rz: f64, cz: f64, facet: u32) {
    const STACKS: usize = 3;
    let ring_at = |s: usize| {
        let phi = std::f64::consts::PI * s as f64 / STACKS as f64; // 0 = top pole
        rim(rx * phi.sin(), cz + rz * phi.cos())
    };
    let top = [0.0, 0.0, cz + rz];
    let bottom = [0.0, 0.0, cz - rz];
    let first = ring_at(1);
    fan(mb, top, &first, true, facet);
    let mut prev = first;
    for s in 2..STACKS {
        let next = ring_at(s);
        band(mb, &next, &prev, facet);
        prev = next;
    }
    fan(mb, bottom, &prev, false, facet);
}
