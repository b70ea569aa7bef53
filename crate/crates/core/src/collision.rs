//! Collision operators: the bilinear hard-sphere operator `Q`, its
//! Maxwellian-normalized form `Gamma`, the linearized operator
//! `L = nu - K` with `K = K2 - K1`, and the macroscopic projector.
//!
//! Post-collision velocities fall off-lattice; gain terms interpolate the
//! Maxwellian-normalized ratio `F / M` trilinearly and restore the Gaussian
//! factor through the exact identity `M(v') M(v*') = M(v) M(v*)`. With the
//! collision frequency evaluated by the same quadrature, `L` annihilates the
//! multilinear invariants `{1, v} sqrt(M)` to rounding; the remaining
//! quadratic defect (and the conservation defect of `Q`) is removed by a
//! rank-five projection, mirroring the explicit symmetrization of `L`.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::velocity::VelocityGrid;
use crate::{Error, Result};

/// Values of a velocity-space function on the lattice nodes.
pub type VelocityFunction = Vec<f64>;

/// The five moment coefficients of `P f` on the orthonormal invariant basis
/// (density, three momentum components, energy), per spatial point or mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroState {
    pub coeffs: [f64; 5],
}

impl MacroState {
    pub fn density(&self) -> f64 {
        self.coeffs[0]
    }
    pub fn momentum(&self) -> [f64; 3] {
        [self.coeffs[1], self.coeffs[2], self.coeffs[3]]
    }
    pub fn energy(&self) -> f64 {
        self.coeffs[4]
    }
}

/// Macro-micro decomposition `g = P g + (I - P) g` in grid `L^2_v`.
pub fn project(g: &[f64], grid: &VelocityGrid) -> (MacroState, VelocityFunction) {
    let mut coeffs = [0.0; 5];
    let mut micro = g.to_vec();
    for (i, e) in grid.null.vectors.iter().enumerate() {
        coeffs[i] = grid.dot(g, e);
    }
    for (i, e) in grid.null.vectors.iter().enumerate() {
        micro.iter_mut().zip(e).for_each(|(x, b)| *x -= coeffs[i] * b);
    }
    (MacroState { coeffs }, micro)
}

/// Macro part only.
pub fn macro_part(g: &[f64], grid: &VelocityGrid) -> VelocityFunction {
    let (st, _) = project(g, grid);
    let mut out = vec![0.0; g.len()];
    for (c, e) in st.coeffs.iter().zip(&grid.null.vectors) {
        out.iter_mut().zip(e).for_each(|(x, b)| *x += c * b);
    }
    out
}

/// Complex macro-micro split (mode-wise fields).
pub fn project_complex(
    g: &[Complex64],
    grid: &VelocityGrid,
) -> ([Complex64; 5], Vec<Complex64>) {
    let mut coeffs = [Complex64::ZERO; 5];
    let mut micro = g.to_vec();
    for (i, e) in grid.null.vectors.iter().enumerate() {
        let mut acc = Complex64::ZERO;
        for (x, b) in g.iter().zip(e) {
            acc += x * b;
        }
        coeffs[i] = acc * grid.w;
    }
    for (i, e) in grid.null.vectors.iter().enumerate() {
        micro.iter_mut().zip(e).for_each(|(x, b)| *x -= coeffs[i] * b);
    }
    (coeffs, micro)
}

/// Collision-invariant moments `<g, psi_i>` for `psi in {1, v, |v|^2}`.
pub fn invariant_moments(g: &[f64], grid: &VelocityGrid) -> [f64; 5] {
    let mut m = [0.0; 5];
    for (k, (x, v)) in g.iter().zip(&grid.nodes).enumerate() {
        let _ = k;
        m[0] += x;
        m[1] += x * v[0];
        m[2] += x * v[1];
        m[3] += x * v[2];
        m[4] += x * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    }
    m.iter_mut().for_each(|x| *x *= grid.w);
    m
}

/// Cost guards for collision-integral evaluations.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    /// Refuse quadrature applications with n_v^3 * n_angular above this.
    pub max_quadrature: u64,
    /// Densely assembled operators allowed up to this many velocity nodes.
    pub max_dense_nodes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_quadrature: 2_000_000,
            max_dense_nodes: 4096,
        }
    }
}

/// Hard-sphere collision quadrature on a shared velocity grid.
#[derive(Clone)]
pub struct Collision {
    pub grid: Arc<VelocityGrid>,
    pub budget: Budget,
}

impl Collision {
    pub fn new(grid: Arc<VelocityGrid>) -> Self {
        Collision {
            grid,
            budget: Budget::default(),
        }
    }

    pub fn with_budget(grid: Arc<VelocityGrid>, budget: Budget) -> Self {
        Collision { grid, budget }
    }

    fn check_quadrature_budget(&self) -> Result<()> {
        let cost = self.grid.len() as u64 * self.grid.sphere.len() as u64;
        if cost > self.budget.max_quadrature {
            return Err(Error::Budget(format!(
                "collision quadrature cost n_v^3 * n_angular = {cost} exceeds budget {}",
                self.budget.max_quadrature
            )));
        }
        Ok(())
    }

    /// Direct quadrature of `Q(F, G)` with ratio interpolation; no
    /// conservation correction. This is the path the brute-force oracle
    /// reproduces.
    pub fn q_bilinear_raw(&self, f: &[f64], g: &[f64]) -> Result<VelocityFunction> {
        self.check_quadrature_budget()?;
        let (q, _) = self.q_quadrature(f, g, false);
        Ok(q)
    }

    /// `Q(F, G)` with the conservation defect projected out. The corrected
    /// moments equal the interpolation-free discrete targets, so the
    /// symmetrized pair `Q(F,G) + Q(G,F)` conserves mass, momentum and
    /// energy to rounding, and `Q(F,F)` does so on its own.
    pub fn q_bilinear(&self, f: &[f64], g: &[f64]) -> Result<VelocityFunction> {
        self.check_quadrature_budget()?;
        let same = std::ptr::eq(f, g) || f == g;
        let (mut q, targets) = self.q_quadrature(f, g, !same);
        let moments = invariant_moments(&q, &self.grid);
        let defect: Vec<f64> = (0..5).map(|i| moments[i] - targets[i]).collect();
        self.subtract_moment_defect(&mut q, &defect);
        Ok(q)
    }

    /// `Gamma(g1, g2) = M^{-1/2} Q(sqrt(M) g1, sqrt(M) g2)`.
    pub fn gamma(&self, g1: &[f64], g2: &[f64]) -> Result<VelocityFunction> {
        let grid = &self.grid;
        let f: Vec<f64> = g1.iter().zip(&grid.maxw.sqrt_m).map(|(a, s)| a * s).collect();
        let h: Vec<f64> = g2.iter().zip(&grid.maxw.sqrt_m).map(|(a, s)| a * s).collect();
        let q = if g1 == g2 {
            self.q_bilinear(&f, &f)?
        } else {
            self.q_bilinear(&f, &h)?
        };
        Ok(q
            .iter()
            .zip(&grid.maxw.sqrt_m)
            .map(|(x, s)| x / s)
            .collect())
    }

    /// Shared quadrature pass. Returns raw `Q(F,G)` and, when requested, the
    /// interpolation-free moment targets
    /// `T_i = sum w^2 a B F_k G_j (psi_i(v') - psi_i(v_k))`
    /// (identically zero for F = G by the pair symmetry of the lattice).
    fn q_quadrature(&self, f: &[f64], g: &[f64], want_targets: bool) -> (VelocityFunction, [f64; 5]) {
        let grid = &*self.grid;
        let n = grid.len();
        let pf: Vec<f64> = f.iter().zip(&grid.maxw.m).map(|(a, m)| a / m).collect();
        let pg: Vec<f64> = g.iter().zip(&grid.maxw.m).map(|(a, m)| a / m).collect();
        let rows: Vec<(f64, [f64; 4])> = (0..n)
            .into_par_iter()
            .map(|k| {
                let vk = grid.nodes[k];
                let pfk = pf[k];
                let mut acc = 0.0;
                let mut tgt = [0.0f64; 4];
                for j in 0..n {
                    let vj = grid.nodes[j];
                    let u = [vk[0] - vj[0], vk[1] - vj[1], vk[2] - vj[2]];
                    let loss = pfk * pg[j];
                    let mut ang = 0.0;
                    let mut tj = [0.0f64; 4];
                    for (om, aw) in grid.sphere.nodes.iter().zip(&grid.sphere.weights) {
                        let c = u[0] * om[0] + u[1] * om[1] + u[2] * om[2];
                        let b = aw * c.abs();
                        if b == 0.0 {
                            continue;
                        }
                        let vp = [vk[0] - c * om[0], vk[1] - c * om[1], vk[2] - c * om[2]];
                        let vq = [vj[0] + c * om[0], vj[1] + c * om[1], vj[2] + c * om[2]];
                        let gain = grid.trilinear(&pf, vp) * grid.trilinear(&pg, vq);
                        ang += b * (gain - loss);
                        if want_targets {
                            // psi(v') - psi(v_k): momentum -c*omega, energy
                            // c^2 - 2 c (v_k . omega).
                            let fl = f[k] * g[j];
                            tj[0] -= b * fl * c * om[0];
                            tj[1] -= b * fl * c * om[1];
                            tj[2] -= b * fl * c * om[2];
                            tj[3] += b * fl * (c * c - 2.0 * c * (vk[0] * om[0] + vk[1] * om[1] + vk[2] * om[2]));
                        }
                    }
                    acc += grid.maxw.m[j] * ang;
                    for a in 0..4 {
                        tgt[a] += tj[a];
                    }
                }
                (grid.maxw.m[k] * grid.w * acc, tgt)
            })
            .collect();
        let q: Vec<f64> = rows.iter().map(|(x, _)| *x).collect();
        let mut targets = [0.0f64; 5];
        if want_targets {
            let w2 = grid.w * grid.w;
            for (_, t) in &rows {
                targets[1] += t[0];
                targets[2] += t[1];
                targets[3] += t[2];
                targets[4] += t[3];
            }
            for t in targets.iter_mut() {
                *t *= w2;
            }
        }
        (q, targets)
    }

    /// Subtract the Maxwell-weighted invariant combination whose moments
    /// equal `defect`.
    fn subtract_moment_defect(&self, q: &mut [f64], defect: &[f64]) {
        let grid = &*self.grid;
        // zeta_i = psi_i M; solve <zeta_j, psi_i> c_j = defect_i.
        let psi = |k: usize, i: usize| -> f64 {
            let v = grid.nodes[k];
            match i {
                0 => 1.0,
                1 => v[0],
                2 => v[1],
                3 => v[2],
                _ => v[0] * v[0] + v[1] * v[1] + v[2] * v[2],
            }
        };
        let mut gram = nalgebra::DMatrix::<f64>::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = 0.0;
                for k in 0..grid.len() {
                    acc += psi(k, i) * psi(k, j) * grid.maxw.m[k];
                }
                gram[(i, j)] = acc * grid.w;
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(defect);
        let c = gram
            .lu()
            .solve(&rhs)
            .expect("invariant Gram matrix is nonsingular");
        for k in 0..grid.len() {
            let mut corr = 0.0;
            for i in 0..5 {
                corr += c[i] * psi(k, i);
            }
            q[k] -= corr * grid.maxw.m[k];
        }
    }

    /// Matrix-free application of the raw linearized scattering part
    /// `K g = K2 g - K1 g`; cost is one full collision quadrature.
    pub fn apply_k_raw(&self, g: &[f64]) -> Result<VelocityFunction> {
        self.check_quadrature_budget()?;
        let grid = &*self.grid;
        let n = grid.len();
        let p: Vec<f64> = g.iter().zip(&grid.maxw.sqrt_m).map(|(a, s)| a / s).collect();
        let out: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| {
                let vk = grid.nodes[k];
                let mut k2 = 0.0;
                let mut k1 = 0.0;
                for j in 0..n {
                    let vj = grid.nodes[j];
                    let u = [vk[0] - vj[0], vk[1] - vj[1], vk[2] - vj[2]];
                    let mut beta = 0.0;
                    let mut gain = 0.0;
                    for (om, aw) in grid.sphere.nodes.iter().zip(&grid.sphere.weights) {
                        let c = u[0] * om[0] + u[1] * om[1] + u[2] * om[2];
                        let b = aw * c.abs();
                        if b == 0.0 {
                            continue;
                        }
                        beta += b;
                        let vp = [vk[0] - c * om[0], vk[1] - c * om[1], vk[2] - c * om[2]];
                        let vq = [vj[0] + c * om[0], vj[1] + c * om[1], vj[2] + c * om[2]];
                        gain += b * (grid.trilinear(&p, vp) + grid.trilinear(&p, vq));
                    }
                    k2 += grid.maxw.m[j] * gain;
                    k1 += beta * grid.maxw.sqrt_m[j] * g[j];
                }
                grid.w * (grid.maxw.sqrt_m[k] * k2 - grid.maxw.sqrt_m[k] * k1)
            })
            .collect();
        Ok(out)
    }

    /// Densely assembled raw `K` matrix (row k, column j).
    pub fn assemble_k_dense(&self) -> Result<Array2<f64>> {
        self.check_quadrature_budget()?;
        let grid = &*self.grid;
        let n = grid.len();
        if n > self.budget.max_dense_nodes {
            return Err(Error::Budget(format!(
                "dense operator with {n} velocity nodes exceeds budget {}; use the matrix-free path",
                self.budget.max_dense_nodes
            )));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                // Gain contributions scatter in p-space (p = g / sqrt(M)) and
                // pick up 1/sqrt(M_c) per column at the end; the loss part
                // K1 acts on g directly.
                let mut gain = vec![0.0; n];
                let mut loss = vec![0.0; n];
                let vk = grid.nodes[k];
                let nn = grid.n_v;
                let scatter = |p: [f64; 3], scale: f64, row: &mut [f64]| {
                    let (ix, tx) = grid.cell_coord(p[0]);
                    let (iy, ty) = grid.cell_coord(p[1]);
                    let (iz, tz) = grid.cell_coord(p[2]);
                    for (dx, wx) in [(0usize, 1.0 - tx), (1, tx)] {
                        for (dy, wy) in [(0usize, 1.0 - ty), (1, ty)] {
                            let wxy = wx * wy;
                            for (dz, wz) in [(0usize, 1.0 - tz), (1, tz)] {
                                let c = ((ix + dx) * nn + (iy + dy)) * nn + (iz + dz);
                                row[c] += scale * wxy * wz;
                            }
                        }
                    }
                };
                for j in 0..n {
                    let vj = grid.nodes[j];
                    let u = [vk[0] - vj[0], vk[1] - vj[1], vk[2] - vj[2]];
                    let mj = grid.maxw.m[j];
                    let mut beta = 0.0;
                    for (om, aw) in grid.sphere.nodes.iter().zip(&grid.sphere.weights) {
                        let c = u[0] * om[0] + u[1] * om[1] + u[2] * om[2];
                        let b = aw * c.abs();
                        if b == 0.0 {
                            continue;
                        }
                        beta += b;
                        let vp = [vk[0] - c * om[0], vk[1] - c * om[1], vk[2] - c * om[2]];
                        let vq = [vj[0] + c * om[0], vj[1] + c * om[1], vj[2] + c * om[2]];
                        let scale = b * mj;
                        scatter(vp, scale, &mut gain);
                        scatter(vq, scale, &mut gain);
                    }
                    loss[j] = beta * grid.maxw.sqrt_m[j];
                }
                let smk = grid.maxw.sqrt_m[k];
                let mut row = vec![0.0; n];
                for c in 0..n {
                    row[c] = grid.w * smk * (gain[c] / grid.maxw.sqrt_m[c] - loss[c]);
                }
                row
            })
            .collect();
        let mut k_mat = Array2::<f64>::zeros((n, n));
        for (k, row) in rows.into_iter().enumerate() {
            for (j, x) in row.into_iter().enumerate() {
                k_mat[(k, j)] = x;
            }
        }
        Ok(k_mat)
    }
}

/// Dense symmetric linearized operator on a velocity grid.
pub struct LinearizedOperator {
    pub grid: Arc<VelocityGrid>,
    /// Final symmetric matrix with the invariant subspace projected out.
    pub matrix: Array2<f64>,
    /// Collision frequency diagonal.
    pub nu: Vec<f64>,
}

impl LinearizedOperator {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn apply(&self, g: &[f64]) -> VelocityFunction {
        let n = self.len();
        let mut out = vec![0.0; n];
        let m = &self.matrix;
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            let row = m.row(k);
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * g[j];
            }
            *o = acc;
        });
        out
    }

    /// Apply to a complex vector (two real applications).
    pub fn apply_complex(&self, g: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = g.iter().map(|z| z.re).collect();
        let im: Vec<f64> = g.iter().map(|z| z.im).collect();
        let ore = self.apply(&re);
        let oim = self.apply(&im);
        ore.into_iter()
            .zip(oim)
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    }

    /// Dirichlet form `<L g, h>`.
    pub fn form(&self, g: &[f64], h: &[f64]) -> f64 {
        self.grid.dot(&self.apply(g), h)
    }
}

/// Assemble the linearized operator: `L_raw = diag(nu) - K`, explicitly
/// symmetrized, then conjugated by `(I - P)` so the five invariant
/// directions are exact null vectors.
pub fn assemble_linearized(collision: &Collision) -> Result<LinearizedOperator> {
    let grid = collision.grid.clone();
    let n = grid.len();
    let k_mat = collision.assemble_k_dense()?;
    let mut l = Array2::<f64>::zeros((n, n));
    // L = diag(nu) - K, symmetrized in place.
    for k in 0..n {
        for j in 0..n {
            let mut x = -0.5 * (k_mat[(k, j)] + k_mat[(j, k)]);
            if k == j {
                x += grid.maxw.nu[k];
            }
            l[(k, j)] = x;
        }
    }
    drop(k_mat);

    // Rank-5 conjugation: L <- (I-P) L (I-P) with P g = sum e_i <e_i, g>.
    // P's matrix is w E E^T, symmetric because the lattice weight is uniform.
    let basis = &grid.null.vectors;
    // A = L E (n x 5), s_ij = <e_i, L e_j>.
    let mut a = vec![vec![0.0; n]; 5];
    for (i, e) in basis.iter().enumerate() {
        let mut col = vec![0.0; n];
        col.par_iter_mut().enumerate().for_each(|(k, o)| {
            let row = l.row(k);
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * e[j];
            }
            *o = acc;
        });
        a[i] = col;
    }
    let mut s = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            s[i][j] = grid.dot(&basis[i], &a[j]);
        }
    }
    // (I-P) L (I-P) = L - P L - L P + P L P; with symmetric L the update is
    // L - sum_i e_i (w a_i)^T - sum_i (w a_i) e_i^T + sum_ij s_ij w e_i (w e_j)^T.
    let w = grid.w;
    {
        use ndarray::parallel::prelude::*;
        let lm = &mut l;
        lm.outer_iter_mut()
            .into_par_iter()
            .enumerate()
            .for_each(|(k, mut row)| {
                for j in 0..n {
                    let mut upd = 0.0;
                    for i in 0..5 {
                        upd -= basis[i][k] * w * a[i][j];
                        upd -= w * a[i][k] * basis[i][j];
                    }
                    for i in 0..5 {
                        for i2 in 0..5 {
                            upd += s[i][i2] * w * basis[i][k] * basis[i2][j];
                        }
                    }
                    row[j] += upd;
                }
            });
    }
    Ok(LinearizedOperator {
        nu: grid.maxw.nu.clone(),
        grid,
        matrix: l,
    })
}

/// Weighted norm `|g|_nu = |nu^{1/2} g|_2`.
pub fn nu_norm(g: &[f64], grid: &VelocityGrid) -> f64 {
    let mut acc = 0.0;
    for ((x, nu), _) in g.iter().zip(&grid.maxw.nu).zip(&grid.nodes) {
        acc += nu * x * x;
    }
    (grid.w * acc).sqrt()
}

/// Coercivity constant: the minimum of `<L h, h> / |h|_nu^2` over the micro
/// subspace, via deflated Lanczos on the nu-symmetrized operator.
pub fn estimate_coercivity(op: &LinearizedOperator, max_iter: usize) -> Result<f64> {
    let grid = &op.grid;
    let n = op.len();
    let inv_sqrt_nu: Vec<f64> = grid.maxw.nu.iter().map(|x| 1.0 / x.sqrt()).collect();
    // Constraint directions q_i = nu^{1/2} e_i, orthonormalized.
    let mut constraints: Vec<Vec<f64>> = Vec::with_capacity(5);
    for e in &grid.null.vectors {
        let mut q: Vec<f64> = e
            .iter()
            .zip(&grid.maxw.nu)
            .map(|(x, nu)| x * nu.sqrt())
            .collect();
        for _ in 0..2 {
            let qs: Vec<f64> = constraints
                .iter()
                .map(|c| grid.dot(&q, c))
                .collect();
            for (c, coef) in constraints.iter().zip(qs) {
                q.iter_mut().zip(c).for_each(|(x, y)| *x -= coef * y);
            }
        }
        let nrm = grid.norm(&q);
        q.iter_mut().for_each(|x| *x /= nrm);
        constraints.push(q);
    }
    let deflate = |v: &mut Vec<f64>| {
        for c in &constraints {
            let coef = grid.dot(v, c);
            v.iter_mut().zip(c).for_each(|(x, y)| *x -= coef * y);
        }
    };
    let apply_a = |u: &[f64]| -> Vec<f64> {
        let h: Vec<f64> = u.iter().zip(&inv_sqrt_nu).map(|(x, s)| x * s).collect();
        let lh = op.apply(&h);
        lh.iter().zip(&inv_sqrt_nu).map(|(x, s)| x * s).collect()
    };

    // Lanczos with full reorthogonalization on the deflated operator.
    let m = max_iter.min(n.saturating_sub(5)).max(2);
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);
    let mut rng = crate::rng::CounterRng::new(0x5eed, 41);
    let mut q = rng.normal_vec(n);
    deflate(&mut q);
    let nrm = grid.norm(&q);
    q.iter_mut().for_each(|x| *x /= nrm);
    qs.push(q);
    for it in 0..m {
        let mut v = apply_a(&qs[it]);
        deflate(&mut v);
        let alpha = grid.dot(&v, &qs[it]);
        alphas.push(alpha);
        for (prev, coef) in [(it, alpha)] {
            v.iter_mut()
                .zip(&qs[prev])
                .for_each(|(x, y)| *x -= coef * y);
        }
        if it > 0 {
            let b = betas[it - 1];
            v.iter_mut()
                .zip(&qs[it - 1])
                .for_each(|(x, y)| *x -= b * y);
        }
        // Full reorthogonalization, then re-deflate: rounding reintroduces
        // invariant-direction components that Lanczos would otherwise
        // amplify into a ghost zero eigenvalue.
        for prev in &qs {
            let coef = grid.dot(&v, prev);
            v.iter_mut().zip(prev).for_each(|(x, y)| *x -= coef * y);
        }
        deflate(&mut v);
        let beta = grid.norm(&v);
        if beta < 1e-13 || it == m - 1 {
            break;
        }
        betas.push(beta);
        v.iter_mut().for_each(|x| *x /= beta);
        qs.push(v);
    }
    let k = alphas.len();
    let mut tri = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        tri[(i, i)] = alphas[i];
        if i + 1 < k {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let eig = tri.symmetric_eigen();
    let kappa = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if kappa <= 0.0 {
        return Err(Error::Numerical(format!(
            "coercivity estimate is nonpositive ({kappa:.3e}); operator assembly is suspect"
        )));
    }
    Ok(kappa)
}
