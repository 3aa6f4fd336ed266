//! ASCII OBJ export with per-building groups and face-tag materials.

use std::io::{self, Write};

use super::Scene;

/// Write the scene as ASCII OBJ: one `o building-<id>` group per building
/// (terrain and trees grouped by tag), `usemtl <tag>` switches per face tag,
/// floats formatted with 9 significant digits.
pub fn write_obj<W: Write>(scene: &Scene, mut w: W) -> io::Result<()> {
    let mesh = &scene.mesh;
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", fmt_g9(v[0]), fmt_g9(v[1]), fmt_g9(v[2]))?;
    }
    let mut current_group: Option<String> = None;
    let mut current_mtl: Option<&'static str> = None;
    for i in 0..mesh.len() {
        let group = match scene.owner_of(i) {
            Some(id) => format!("building-{id}"),
            None => mesh.tags[i].name().to_string(),
        };
        if current_group.as_deref() != Some(group.as_str()) {
            writeln!(w, "o {group}")?;
            current_group = Some(group);
            current_mtl = None;
        }
        let mtl = mesh.tags[i].name();
        if current_mtl != Some(mtl) {
            writeln!(w, "usemtl {mtl}")?;
            current_mtl = Some(mtl);
        }
        let t = mesh.triangles[i];
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed,
/// exponent notation outside [1e-4, 1e9). Deterministic for equal inputs.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        let mut s = format!("{x:.8e}");
        // Trim zeros in the mantissa: 1.20000000e10 -> 1.2e10
        if let Some(epos) = s.find('e') {
            let (mant, exp) = s.split_at(epos);
            let mut mant = mant.to_string();
            if mant.contains('.') {
                while mant.ends_with('0') {
                    mant.pop();
                }
                if mant.ends_with('.') {
                    mant.pop();
                }
            }
            s = format!("{mant}{exp}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TileIndex;
    use crate::mesh::{build_scene, rect_footprint, BuildingModel, Lod, TileContent};

    #[test]
    fn fmt_g9_basics() {
        assert_eq!(fmt_g9(0.0), "0");
        assert_eq!(fmt_g9(1.0), "1");
        assert_eq!(fmt_g9(-2.5), "-2.5");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(0.125), "0.125");
        assert_eq!(fmt_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g9(1e-5), "1e-5");
        assert_eq!(fmt_g9(1.5e12), "1.5e12");
    }

    #[test]
    fn obj_contains_groups_and_materials() {
        let b = BuildingModel {
            id: "a1".into(),
            footprint: rect_footprint(0.0, 0.0, 2.0, 1.0),
            base_z: 0.0,
            height_m: 3.0,
            lod: Lod::Lod1,
        };
        let scene = build_scene(&[TileContent {
            tile: TileIndex::new(0, 0, 0),
            buildings: vec![b],
        }])
        .unwrap();
        let mut buf = Vec::new();
        write_obj(&scene, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("o building-a1"));
        assert!(text.contains("usemtl wall"));
        assert!(text.contains("usemtl roof"));
        assert!(text.contains("usemtl ground"));
        let nv = text.lines().filter(|l| l.starts_with("v ")).count();
        let nf = text.lines().filter(|l| l.starts_with("f ")).count();
        assert_eq!(nv, 8);
        assert_eq!(nf, 12);
    }

    #[test]
    fn obj_export_is_deterministic() {
        let b = BuildingModel {
            id: "d".into(),
            footprint: rect_footprint(1.0, 2.0, 3.0, 4.0),
            base_z: 0.5,
            height_m: 7.25,
            lod: Lod::Lod1,
        };
        let scene = build_scene(&[TileContent {
            tile: TileIndex::new(0, 0, 0),
            buildings: vec![b],
        }])
        .unwrap();
        let mut a = Vec::new();
        let mut b2 = Vec::new();
        write_obj(&scene, &mut a).unwrap();
        write_obj(&scene, &mut b2).unwrap();
        assert_eq!(a, b2);
    }
}
