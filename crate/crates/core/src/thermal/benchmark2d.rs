//! Steady-state radiosity/conduction balance between 2D building blocks.
//!
//! Rectangle edges form a segment network: crossed-strings view factors give
//! the radiative couplings (symmetrized so exchange is exactly conservative),
//! each segment conducts to its block's boundary temperature, and the linear
//! balance is solved directly.

use crate::polygon::Point2;
use crate::radiation::crossed_strings_2d;

use super::{ThermalError, DEFAULT_H_R};

/// Axis-aligned block with a prescribed core/boundary temperature.
#[derive(Debug, Clone, Copy)]
pub struct Block2d {
    pub min: Point2,
    pub max: Point2,
    pub boundary_temp_c: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Benchmark2dConfig {
    /// Linearized radiative coefficient, W/(m²·K).
    pub h_r: f64,
    /// Conductance from each segment to its block core, W/(m²·K).
    pub h_cond: f64,
    /// Ambient temperature seen through the residual (sky) view factor;
    /// `None` disables the sky coupling.
    pub ambient_c: Option<f64>,
}

impl Default for Benchmark2dConfig {
    fn default() -> Self {
        Benchmark2dConfig { h_r: DEFAULT_H_R, h_cond: 10.0, ambient_c: None }
    }
}

/// One unknown of the segment network (per unit depth).
#[derive(Debug, Clone)]
pub struct NetworkSegment {
    pub length: f64,
    /// Dirichlet temperature; overrides the balance equation.
    pub fixed_temp: Option<f64>,
    /// (conductance W/(m·K) per unit depth, anchor temperature) pairs.
    pub anchors: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Benchmark2dResult {
    pub segments: Vec<(Point2, Point2)>,
    pub block_of: Vec<usize>,
    pub temps: Vec<f64>,
    /// Row-major segment-to-segment view factors.
    pub view_factors: Vec<f64>,
    /// Net flux into each segment at the solution (conduction + radiation +
    /// sky), W per unit depth; ~0 at steady state.
    pub net_flux: Vec<f64>,
}

/// Solve the linear balance `Σ_j K_ij (T_j − T_i) + Σ anchors g (T_a − T_i) = 0`
/// with `K` symmetric. Residual is driven below 1e-10 of the system scale.
pub fn solve_segment_network(
    segments: &[NetworkSegment],
    coupling: &[f64],
) -> Result<Vec<f64>, ThermalError> {
    let n = segments.len();
    assert_eq!(coupling.len(), n * n, "coupling must be n×n");
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        if let Some(t) = segments[i].fixed_temp {
            a[i * n + i] = 1.0;
            rhs[i] = t;
            continue;
        }
        let mut diag = 0.0;
        for j in 0..n {
            if j != i {
                let k = coupling[i * n + j];
                diag += k;
                a[i * n + j] = -k;
            }
        }
        for &(g, t) in &segments[i].anchors {
            diag += g;
            rhs[i] += g * t;
        }
        a[i * n + i] = diag;
    }
    let temps = gauss_solve(&mut a, &mut rhs, n)?;
    Ok(temps)
}

fn gauss_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<Vec<f64>, ThermalError> {
    let scale = a.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))
            .unwrap();
        if a[pivot_row * n + col].abs() < 1e-12 * scale {
            return Err(ThermalError::SingularSystem);
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        for row in (col + 1)..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Steady surface temperatures of block edges exchanging by (linearized)
/// radiation, conducting to their block cores, optionally seeing the sky.
pub fn solve_2d_benchmark(
    blocks: &[Block2d],
    cfg: &Benchmark2dConfig,
) -> Result<Benchmark2dResult, ThermalError> {
    assert!(!blocks.is_empty());
    // Outward-oriented edges, CCW per block.
    let mut segments: Vec<(Point2, Point2)> = Vec::with_capacity(4 * blocks.len());
    let mut normals: Vec<Point2> = Vec::with_capacity(4 * blocks.len());
    let mut block_of: Vec<usize> = Vec::with_capacity(4 * blocks.len());
    for (bi, b) in blocks.iter().enumerate() {
        let c = [
            Point2::new(b.min.x, b.min.y),
            Point2::new(b.max.x, b.min.y),
            Point2::new(b.max.x, b.max.y),
            Point2::new(b.min.x, b.max.y),
        ];
        let ns = [
            Point2::new(0.0, -1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(-1.0, 0.0),
        ];
        for k in 0..4 {
            segments.push((c[k], c[(k + 1) % 4]));
            normals.push(ns[k]);
            block_of.push(bi);
        }
    }
    let n = segments.len();
    let mid = |s: (Point2, Point2)| Point2::new(0.5 * (s.0.x + s.1.x), 0.5 * (s.0.y + s.1.y));

    let mut f = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if block_of[i] == block_of[j] {
                continue; // convex blocks: own edges never exchange
            }
            let (mi, mj) = (mid(segments[i]), mid(segments[j]));
            let facing = normals[i].x * (mj.x - mi.x) + normals[i].y * (mj.y - mi.y) > 0.0
                && normals[j].x * (mi.x - mj.x) + normals[j].y * (mi.y - mj.y) > 0.0;
            if !facing {
                continue;
            }
            let blockers: Vec<(Point2, Point2)> = (0..n)
                .filter(|&k| block_of[k] != block_of[i] && block_of[k] != block_of[j])
                .map(|k| segments[k])
                .collect();
            f[i * n + j] = crossed_strings_2d(segments[i], segments[j], &blockers)
                .expect("benchmark segments are non-degenerate and disjoint");
        }
    }

    let length = |s: (Point2, Point2)| s.0.dist(s.1);
    // Symmetrized couplings keep the exchange exactly conservative.
    let mut coupling = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                coupling[i * n + j] = cfg.h_r
                    * 0.5
                    * (length(segments[i]) * f[i * n + j] + length(segments[j]) * f[j * n + i]);
            }
        }
    }

    let network: Vec<NetworkSegment> = (0..n)
        .map(|i| {
            let li = length(segments[i]);
            let mut anchors = vec![(cfg.h_cond * li, blocks[block_of[i]].boundary_temp_c)];
            if let Some(t_amb) = cfg.ambient_c {
                let f_sky = (1.0 - (0..n).map(|j| f[i * n + j]).sum::<f64>()).max(0.0);
                anchors.push((cfg.h_r * li * f_sky, t_amb));
            }
            NetworkSegment { length: li, fixed_temp: None, anchors }
        })
        .collect();
    let temps = solve_segment_network(&network, &coupling)?;

    let net_flux: Vec<f64> = (0..n)
        .map(|i| {
            let radiation: f64 = (0..n)
                .map(|j| coupling[i * n + j] * (temps[j] - temps[i]))
                .sum();
            let anchors: f64 = network[i]
                .anchors
                .iter()
                .map(|&(g, t)| g * (t - temps[i]))
                .sum();
            radiation + anchors
        })
        .collect();
    Ok(Benchmark2dResult { segments, block_of, temps, view_factors: f, net_flux })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(x0: f64, y0: f64, w: f64, h: f64, t: f64) -> Block2d {
        Block2d {
            min: Point2::new(x0, y0),
            max: Point2::new(x0 + w, y0 + h),
            boundary_temp_c: t,
        }
    }

    #[test]
    fn isothermal_blocks_stay_isothermal() {
        let blocks = [
            block(0.0, 0.0, 2.0, 4.0, 18.0),
            block(4.0, 0.0, 2.0, 4.0, 18.0),
            block(8.0, 0.0, 2.0, 4.0, 18.0),
        ];
        let r = solve_2d_benchmark(&blocks, &Benchmark2dConfig::default()).unwrap();
        for &t in &r.temps {
            assert!((t - 18.0).abs() < 1e-10, "{t}");
        }
    }

    #[test]
    fn two_segment_enclosure_equalizes() {
        // F12 = F21 = 1, radiative only, T1 fixed: zero net flux forces
        // T2 = T1.
        let segments = vec![
            NetworkSegment { length: 1.0, fixed_temp: Some(40.0), anchors: vec![] },
            NetworkSegment { length: 1.0, fixed_temp: None, anchors: vec![] },
        ];
        let h_r = 5.0;
        let coupling = vec![0.0, h_r, h_r, 0.0];
        let temps = solve_segment_network(&segments, &coupling).unwrap();
        assert!((temps[1] - 40.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_three_blocks_conserve_flux() {
        let blocks = [
            block(0.0, 0.0, 2.0, 5.0, 35.0),
            block(4.0, 0.5, 2.0, 3.0, 18.0),
            block(8.0, 0.0, 2.0, 5.0, 5.0),
        ];
        let r = solve_2d_benchmark(&blocks, &Benchmark2dConfig::default()).unwrap();
        // Per-segment balance is the solved equation; the summed net flux
        // (all conduction in = all radiation redistributed) must vanish.
        let total: f64 = r.net_flux.iter().sum();
        assert!(total.abs() < 1e-8, "net flux {total}");
        for &q in &r.net_flux {
            assert!(q.abs() < 1e-8, "segment residual {q}");
        }
        // Maximum principle: temperatures between the boundary extremes.
        for &t in &r.temps {
            assert!((5.0..=35.0).contains(&t), "{t}");
        }
        // The middle block's west face is warmed above its own boundary
        // temperature by the hot block.
        let west_mid = r
            .temps
            .iter()
            .zip(&r.block_of)
            .zip(&r.segments)
            .find(|((_, &b), (s0, s1))| b == 1 && s0.x == 4.0 && s1.x == 4.0)
            .map(|((t, _), _)| *t)
            .unwrap();
        assert!(west_mid > 18.0);
    }

    #[test]
    fn middle_block_shadows_outer_exchange() {
        let blocks = [
            block(0.0, 0.0, 2.0, 4.0, 30.0),
            block(4.0, 0.0, 2.0, 4.0, 20.0),
            block(8.0, 0.0, 2.0, 4.0, 10.0),
        ];
        let r = solve_2d_benchmark(&blocks, &Benchmark2dConfig::default()).unwrap();
        let n = r.segments.len();
        // Block 0's east face (index 1) vs block 2's west face (index 11):
        // fully hidden behind block 1.
        assert_eq!(r.view_factors[1 * n + 11], 0.0);
        // But it does see block 1's west face (index 7).
        assert!(r.view_factors[1 * n + 7] > 0.1);
    }

    #[test]
    fn ambient_coupling_pulls_temperatures() {
        let blocks = [block(0.0, 0.0, 2.0, 2.0, 30.0)];
        let cold_sky = Benchmark2dConfig { ambient_c: Some(-10.0), ..Default::default() };
        let r = solve_2d_benchmark(&blocks, &cold_sky).unwrap();
        for &t in &r.temps {
            assert!(t < 30.0 && t > -10.0);
        }
    }

    #[test]
    fn unanchored_network_is_singular() {
        let segments = vec![
            NetworkSegment { length: 1.0, fixed_temp: None, anchors: vec![] },
            NetworkSegment { length: 1.0, fixed_temp: None, anchors: vec![] },
        ];
        let coupling = vec![0.0, 5.0, 5.0, 0.0];
        assert!(matches!(
            solve_segment_network(&segments, &coupling),
            Err(ThermalError::SingularSystem)
        ));
    }
}
