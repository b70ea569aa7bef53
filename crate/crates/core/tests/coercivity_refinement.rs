//! Grid-refinement stability of the coercivity constant. The n_v = 24
//! operator is assembled densely here (it fits in memory and is far faster
//! than repeated matrix-free applications); the matrix-free path is
//! oracle-checked separately.

use std::sync::Arc;

use hardsphere::collision::{assemble_linearized, estimate_coercivity, Budget, Collision};
use hardsphere::velocity::build_grid;

fn kappa(n_v: usize) -> f64 {
    let grid = Arc::new(build_grid(6.0, n_v, 14).unwrap());
    let col = Collision::with_budget(
        grid,
        Budget {
            max_quadrature: u64::MAX,
            max_dense_nodes: usize::MAX,
        },
    );
    let op = Arc::new(assemble_linearized(&col).unwrap());
    estimate_coercivity(&op, 160).unwrap()
}

#[test]
fn kappa0_stable_between_16_and_24() {
    let k16 = kappa(16);
    let k24 = kappa(24);
    let rel = (k24 - k16).abs() / k24;
    println!("kappa0: n_v=16 -> {k16:.6}, n_v=24 -> {k24:.6}, change {:.1}%", rel * 100.0);
    assert!(k16 > 0.0 && k24 > 0.0);
    assert!(rel < 0.10, "kappa0 drifted {:.1}% between n_v=16 and 24", rel * 100.0);
}
