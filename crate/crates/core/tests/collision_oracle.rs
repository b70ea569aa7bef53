//! Brute-force oracle equivalence: the production collision quadrature must
//! match an independent naive double-loop implementation on an 8^3 grid.

use std::sync::Arc;

use hardsphere::collision::Collision;
use hardsphere::velocity::{build_grid, VelocityGrid};

/// Naive trilinear gather with clamped extrapolation, written independently
/// of the library path.
fn naive_interp(grid: &VelocityGrid, values: &[f64], p: [f64; 3]) -> f64 {
    let n = grid.n_v;
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        let xi = (p[a] + grid.r) / grid.h - 0.5;
        let mut i0 = xi.floor();
        let mut t = xi - i0;
        if i0 < 0.0 {
            i0 = 0.0;
            t = 0.0;
        }
        if i0 > (n - 2) as f64 {
            i0 = (n - 2) as f64;
            t = 1.0;
        }
        base[a] = i0 as usize;
        frac[a] = t;
    }
    let mut acc = 0.0;
    for dx in 0..2 {
        for dy in 0..2 {
            for dz in 0..2 {
                let w = (if dx == 0 { 1.0 - frac[0] } else { frac[0] })
                    * (if dy == 0 { 1.0 - frac[1] } else { frac[1] })
                    * (if dz == 0 { 1.0 - frac[2] } else { frac[2] });
                let idx = ((base[0] + dx) * n + (base[1] + dy)) * n + (base[2] + dz);
                acc += w * values[idx];
            }
        }
    }
    acc
}

/// Naive double-loop quadrature of Q(F, G) with Maxwellian-ratio gains.
fn naive_q(grid: &VelocityGrid, f: &[f64], g: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let pf: Vec<f64> = f.iter().zip(&grid.maxw.m).map(|(a, m)| a / m).collect();
    let pg: Vec<f64> = g.iter().zip(&grid.maxw.m).map(|(a, m)| a / m).collect();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let vk = grid.nodes[k];
        let mut acc = 0.0;
        for j in 0..n {
            let vj = grid.nodes[j];
            let u = [vk[0] - vj[0], vk[1] - vj[1], vk[2] - vj[2]];
            let mut ang = 0.0;
            for (om, aw) in grid.sphere.nodes.iter().zip(&grid.sphere.weights) {
                let c = u[0] * om[0] + u[1] * om[1] + u[2] * om[2];
                if c == 0.0 {
                    continue;
                }
                let vp = [vk[0] - c * om[0], vk[1] - c * om[1], vk[2] - c * om[2]];
                let vq = [vj[0] + c * om[0], vj[1] + c * om[1], vj[2] + c * om[2]];
                let gain = naive_interp(grid, &pf, vp) * naive_interp(grid, &pg, vq);
                ang += aw * c.abs() * (gain - pf[k] * pg[j]);
            }
            acc += grid.maxw.m[j] * ang;
        }
        out[k] = grid.maxw.m[k] * grid.w * acc;
    }
    out
}

/// Naive application of K = K2 - K1 to a perturbation profile.
fn naive_k(grid: &VelocityGrid, g: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let p: Vec<f64> = g
        .iter()
        .zip(&grid.maxw.sqrt_m)
        .map(|(a, s)| a / s)
        .collect();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let vk = grid.nodes[k];
        let mut gain = 0.0;
        let mut loss = 0.0;
        for j in 0..n {
            let vj = grid.nodes[j];
            let u = [vk[0] - vj[0], vk[1] - vj[1], vk[2] - vj[2]];
            for (om, aw) in grid.sphere.nodes.iter().zip(&grid.sphere.weights) {
                let c = u[0] * om[0] + u[1] * om[1] + u[2] * om[2];
                if c == 0.0 {
                    continue;
                }
                let b = aw * c.abs();
                let vp = [vk[0] - c * om[0], vk[1] - c * om[1], vk[2] - c * om[2]];
                let vq = [vj[0] + c * om[0], vj[1] + c * om[1], vj[2] + c * om[2]];
                gain += b
                    * grid.maxw.m[j]
                    * (naive_interp(grid, &p, vp) + naive_interp(grid, &p, vq));
                loss += b * grid.maxw.sqrt_m[j] * g[j];
            }
        }
        out[k] = grid.w * grid.maxw.sqrt_m[k] * (gain - loss);
    }
    out
}

#[test]
fn q_application_matches_naive_double_loop() {
    let grid = Arc::new(build_grid(5.0, 8, 14).unwrap());
    let col = Collision::new(grid.clone());
    // Single-node impulse and a smooth positive distribution.
    let mut impulse = vec![0.0; grid.len()];
    impulse[grid.node_index(3, 4, 2)] = 1.0;
    let smooth: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.maxw.m)
        .map(|(v, m)| m * (1.0 + 0.2 * (v[0] * 0.5).sin()))
        .collect();
    for (f, g) in [(&impulse, &smooth), (&smooth, &smooth)] {
        let fast = col.q_bilinear_raw(f, g).unwrap();
        let slow = naive_q(&grid, f, g);
        let scale = grid.norm(&slow).max(1e-300);
        let mut worst = 0.0f64;
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
        assert!(
            worst / scale < 1e-10,
            "Q mismatch {worst:.3e} against scale {scale:.3e}"
        );
    }
}

#[test]
fn k_application_matches_naive_double_loop() {
    let grid = Arc::new(build_grid(5.0, 8, 14).unwrap());
    let col = Collision::new(grid.clone());
    let mut rng = hardsphere::rng::CounterRng::new(2024, 0);
    let g: Vec<f64> = grid
        .maxw
        .sqrt_m
        .iter()
        .map(|s| s * rng.normal())
        .collect();
    let fast = col.apply_k_raw(&g).unwrap();
    let slow = naive_k(&grid, &g);
    let scale = grid.norm(&slow).max(1e-300);
    let mut worst = 0.0f64;
    for (a, b) in fast.iter().zip(&slow) {
        worst = worst.max((a - b).abs());
    }
    assert!(
        worst / scale < 1e-10,
        "K mismatch {worst:.3e} against scale {scale:.3e}"
    );
}

#[test]
fn dense_assembly_matches_naive_k() {
    let grid = Arc::new(build_grid(4.5, 6, 14).unwrap());
    let col = Collision::new(grid.clone());
    let k = col.assemble_k_dense().unwrap();
    let mut rng = hardsphere::rng::CounterRng::new(7, 1);
    let g: Vec<f64> = (0..grid.len()).map(|_| rng.normal()).collect();
    let dense: Vec<f64> = (0..grid.len())
        .map(|i| (0..grid.len()).map(|j| k[(i, j)] * g[j]).sum())
        .collect();
    let slow = naive_k(&grid, &g);
    let scale = grid.norm(&slow).max(1e-300);
    let mut worst = 0.0f64;
    for (a, b) in dense.iter().zip(&slow) {
        worst = worst.max((a - b).abs());
    }
    assert!(worst / scale < 1e-10, "assembled K mismatch {worst:.3e}");
}
