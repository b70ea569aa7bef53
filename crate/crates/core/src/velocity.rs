//! Velocity-space discretization.
//!
//! Velocity space is truncated to the cube `[-R, R]^3` and discretized by a
//! uniform cell-centered lattice (midpoint quadrature, weight `h^3` per
//! node). The lattice is closed under `v -> -v` for even `n_v`. Angular
//! integrals over the unit sphere use octahedrally symmetric rules (6, 14 or
//! 26 nodes) or a Gauss-Legendre product grid for larger node counts.

use crate::{Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// The normalized global Maxwellian `(2 pi)^{-3/2} exp(-|v|^2 / 2)`.
pub fn maxwellian(v: [f64; 3]) -> f64 {
    let q = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    (2.0 * std::f64::consts::PI).powf(-1.5) * (-0.5 * q).exp()
}

/// Quadrature rule on the unit sphere.
#[derive(Clone, Debug)]
pub struct AngularRule {
    pub nodes: Vec<[f64; 3]>,
    /// Weights normalized so that a constant 1 integrates to 4*pi.
    pub weights: Vec<f64>,
}

impl AngularRule {
    /// Build a rule with (at least) `n` nodes. Counts 6, 14 and 26 map to the
    /// classical octahedral rules (degree 3, 5 and 7); anything else gets a
    /// Gauss-Legendre x uniform product grid rounded up to cover `n` nodes.
    pub fn with_nodes(n: usize) -> Result<AngularRule> {
        if n < 6 {
            return Err(Error::InvalidParameter(format!(
                "angular rule needs at least 6 nodes, got {n}"
            )));
        }
        match n {
            6 => Ok(Self::octahedral_6()),
            14 => Ok(Self::octahedral_14()),
            26 => Ok(Self::octahedral_26()),
            _ => Ok(Self::product_gauss(n)),
        }
    }

    fn octahedral_6() -> AngularRule {
        let nodes = axis_orbit();
        let w = FOUR_PI / 6.0;
        AngularRule {
            weights: vec![w; 6],
            nodes,
        }
    }

    fn octahedral_14() -> AngularRule {
        let mut nodes = axis_orbit();
        let mut weights = vec![FOUR_PI / 15.0; 6];
        nodes.extend(corner_orbit());
        weights.extend(vec![FOUR_PI * 3.0 / 40.0; 8]);
        AngularRule { nodes, weights }
    }

    fn octahedral_26() -> AngularRule {
        let mut nodes = axis_orbit();
        let mut weights = vec![FOUR_PI / 21.0; 6];
        nodes.extend(edge_orbit());
        weights.extend(vec![FOUR_PI * 4.0 / 105.0; 12]);
        nodes.extend(corner_orbit());
        weights.extend(vec![FOUR_PI * 9.0 / 280.0; 8]);
        AngularRule { nodes, weights }
    }

    /// Gauss-Legendre in cos(theta) times a uniform azimuthal grid.
    fn product_gauss(n: usize) -> AngularRule {
        let n_theta = ((n as f64 / 2.0).sqrt().ceil() as usize).max(3);
        let n_phi = 2 * n_theta;
        let (mu, wmu) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (m, wm) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).sqrt();
            for j in 0..n_phi {
                let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_phi as f64;
                nodes.push([s * phi.cos(), s * phi.sin(), *m]);
                weights.push(wm * 2.0 * std::f64::consts::PI / n_phi as f64);
            }
        }
        AngularRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn axis_orbit() -> Vec<[f64; 3]> {
    vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
}

fn corner_orbit() -> Vec<[f64; 3]> {
    let c = 1.0 / 3.0_f64.sqrt();
    let mut v = Vec::with_capacity(8);
    for &sx in &[c, -c] {
        for &sy in &[c, -c] {
            for &sz in &[c, -c] {
                v.push([sx, sy, sz]);
            }
        }
    }
    v
}

fn edge_orbit() -> Vec<[f64; 3]> {
    let e = 1.0 / 2.0_f64.sqrt();
    let mut v = Vec::with_capacity(12);
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        for &sa in &[e, -e] {
            for &sb in &[e, -e] {
                let mut p = [0.0; 3];
                p[a] = sa;
                p[b] = sb;
                v.push(p);
            }
        }
    }
    v
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess.
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, t);
        x[n - 1 - i] = t;
        w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Value and derivative of the Legendre polynomial P_n.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Pointwise Maxwellian data on the lattice.
#[derive(Clone, Debug)]
pub struct MaxwellianTable {
    pub m: Vec<f64>,
    pub sqrt_m: Vec<f64>,
    /// Collision frequency nu(v_k) by the grid quadrature.
    pub nu: Vec<f64>,
}

/// Orthonormal basis of `span{1, v1, v2, v3, |v|^2} sqrt(M)` in grid L^2_v.
#[derive(Clone, Debug)]
pub struct NullBasis {
    /// Five orthonormal vectors over lattice nodes, in the order obtained by
    /// Gram-Schmidt on {1, v1, v2, v3, |v|^2} sqrt(M).
    pub vectors: Vec<Vec<f64>>,
    /// Condition number of the raw moment Gram matrix.
    pub gram_condition: f64,
}

/// Uniform cell-centered velocity lattice with quadrature and tables.
#[derive(Clone, Debug)]
pub struct VelocityGrid {
    pub r: f64,
    pub n_v: usize,
    /// Lattice spacing 2R / n_v.
    pub h: f64,
    /// Quadrature weight per node (h^3).
    pub w: f64,
    pub nodes: Vec<[f64; 3]>,
    pub sphere: AngularRule,
    pub maxw: MaxwellianTable,
    pub null: NullBasis,
}

impl VelocityGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Coordinate of 1-D lattice index `i`.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.r + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn node_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n_v + iy) * self.n_v + iz
    }

    /// Index of the negated node -v_k.
    pub fn negated_index(&self, k: usize) -> usize {
        let n = self.n_v;
        let iz = k % n;
        let iy = (k / n) % n;
        let ix = k / (n * n);
        self.node_index(n - 1 - ix, n - 1 - iy, n - 1 - iz)
    }

    /// Grid L^2_v inner product.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }

    /// Cell index and fraction for interpolation along one axis, with
    /// constant extrapolation outside the node hull.
    #[inline]
    pub fn cell_coord(&self, x: f64) -> (usize, f64) {
        let xi = (x + self.r) / self.h - 0.5;
        let i0 = xi.floor() as isize;
        if i0 < 0 {
            (0, 0.0)
        } else if i0 as usize >= self.n_v - 1 {
            (self.n_v - 2, 1.0)
        } else {
            (i0 as usize, xi - i0 as f64)
        }
    }

    /// Trilinear interpolation of nodal `values` at an arbitrary point.
    /// Outside the node hull the value is extrapolated as a constant; the
    /// collision quadrature interpolates Maxwellian-normalized ratios, for
    /// which this keeps the equilibrium ratio exact out to the corners.
    #[inline]
    pub fn trilinear(&self, values: &[f64], p: [f64; 3]) -> f64 {
        let n = self.n_v;
        let (ix, tx) = self.cell_coord(p[0]);
        let (iy, ty) = self.cell_coord(p[1]);
        let (iz, tz) = self.cell_coord(p[2]);
        let mut acc = 0.0;
        for (dx, wx) in [(0usize, 1.0 - tx), (1, tx)] {
            for (dy, wy) in [(0usize, 1.0 - ty), (1, ty)] {
                let wxy = wx * wy;
                for (dz, wz) in [(0usize, 1.0 - tz), (1, tz)] {
                    let k = ((ix + dx) * n + (iy + dy)) * n + (iz + dz);
                    acc += wxy * wz * values[k];
                }
            }
        }
        acc
    }

    /// Nodes grouped by radius |v|, sorted ascending; used by the radial
    /// monotonicity checks.
    pub fn radial_shells(&self) -> Vec<(f64, Vec<usize>)> {
        let mut shells: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut order: Vec<usize> = (0..self.len()).collect();
        let radius = |k: usize| {
            let v = self.nodes[k];
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        };
        order.sort_by(|&a, &b| radius(a).total_cmp(&radius(b)));
        for k in order {
            let r = radius(k);
            match shells.last_mut() {
                Some((r0, list)) if (r - *r0).abs() < 1e-9 => list.push(k),
                _ => shells.push((r, vec![k])),
            }
        }
        shells
    }
}

/// Collision frequency `nu(v) = int int |(v - v*).omega| M(v*) domega dv*`
/// evaluated by the grid quadrature at an arbitrary velocity.
pub fn collision_frequency(v: [f64; 3], grid: &VelocityGrid) -> f64 {
    let mut acc = 0.0;
    for (j, vj) in grid.nodes.iter().enumerate() {
        let u = [v[0] - vj[0], v[1] - vj[1], v[2] - vj[2]];
        let mut ang = 0.0;
        for (om, aw) in grid.sphere.nodes.iter().zip(&grid.sphere.weights) {
            ang += aw * (u[0] * om[0] + u[1] * om[1] + u[2] * om[2]).abs();
        }
        acc += grid.maxw.m[j] * ang;
    }
    acc * grid.w
}

/// Gram-Schmidt orthonormalization of the collision-invariant moments
/// `{1, v1, v2, v3, |v|^2} sqrt(M)` under the grid quadrature.
pub fn build_null_basis(
    nodes: &[[f64; 3]],
    sqrt_m: &[f64],
    w: f64,
) -> Result<NullBasis> {
    let n = nodes.len();
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(5);
    for moment in 0..5 {
        let mut v = vec![0.0; n];
        for (k, p) in nodes.iter().enumerate() {
            let phi = match moment {
                0 => 1.0,
                1 => p[0],
                2 => p[1],
                3 => p[2],
                _ => p[0] * p[0] + p[1] * p[1] + p[2] * p[2],
            };
            v[k] = phi * sqrt_m[k];
        }
        raw.push(v);
    }

    // Condition of the raw Gram matrix flags grids too coarse to separate
    // the five moments.
    let mut gram = nalgebra::DMatrix::<f64>::zeros(5, 5);
    for i in 0..5 {
        for j in 0..5 {
            gram[(i, j)] = w * raw[i].iter().zip(&raw[j]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(cond < 1e8) {
        return Err(Error::Numerical(format!(
            "moment Gram matrix condition {cond:.3e} exceeds 1e8; grid too coarse"
        )));
    }

    let dot = |a: &[f64], b: &[f64]| w * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(5);
    for mut v in raw {
        // Two Gram-Schmidt passes keep orthogonality at rounding level.
        for _ in 0..2 {
            for e in &basis {
                let c = dot(&v, e);
                v.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = dot(&v, &v).sqrt();
        if nrm < 1e-14 {
            return Err(Error::Numerical(
                "degenerate moment basis on this grid".into(),
            ));
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        basis.push(v);
    }
    Ok(NullBasis {
        vectors: basis,
        gram_condition: cond,
    })
}

/// Everything except the collision-frequency table (which dominates the
/// construction cost and is cached on disk).
pub fn rebuild_without_nu(r: f64, n_v: usize, n_angular: usize) -> Result<VelocityGrid> {
    build_grid_inner(r, n_v, n_angular, false)
}

/// Build the velocity lattice with Maxwellian tables, collision frequency
/// samples and the orthonormal moment basis.
pub fn build_grid(r: f64, n_v: usize, n_angular: usize) -> Result<VelocityGrid> {
    build_grid_inner(r, n_v, n_angular, true)
}

fn build_grid_inner(r: f64, n_v: usize, n_angular: usize, with_nu: bool) -> Result<VelocityGrid> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cutoff radius must be positive, got {r}"
        )));
    }
    if n_v % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "velocity grid must be even (got n_v = {n_v}); odd grids break the v -> -v symmetry"
        )));
    }
    if n_v < 4 {
        return Err(Error::InvalidParameter(format!(
            "velocity grid needs n_v >= 4, got {n_v}"
        )));
    }
    let sphere = AngularRule::with_nodes(n_angular)?;
    let h = 2.0 * r / n_v as f64;
    let w = h * h * h;
    let n3 = n_v * n_v * n_v;
    let mut nodes = Vec::with_capacity(n3);
    for ix in 0..n_v {
        for iy in 0..n_v {
            for iz in 0..n_v {
                nodes.push([
                    -r + (ix as f64 + 0.5) * h,
                    -r + (iy as f64 + 0.5) * h,
                    -r + (iz as f64 + 0.5) * h,
                ]);
            }
        }
    }
    let m: Vec<f64> = nodes.iter().map(|&v| maxwellian(v)).collect();
    let sqrt_m: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();
    let null = build_null_basis(&nodes, &sqrt_m, w)?;

    let mut grid = VelocityGrid {
        r,
        n_v,
        h,
        w,
        nodes,
        sphere,
        maxw: MaxwellianTable {
            m,
            sqrt_m,
            nu: Vec::new(),
        },
        null,
    };
    if with_nu {
        // nu at the lattice nodes, by the same quadrature used for the
        // collision integrals; this makes the multilinear null vectors of L
        // exact.
        use rayon::prelude::*;
        let nu: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|k| collision_frequency(grid.nodes[k], &grid))
            .collect();
        grid.maxw.nu = nu;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_rules_integrate_constants() {
        for n in [6, 14, 26, 38] {
            let rule = AngularRule::with_nodes(n).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!(
                (total - FOUR_PI).abs() < 1e-10,
                "rule {n}: total {total} != 4pi"
            );
        }
    }

    #[test]
    fn angular_degree_five_exactness() {
        // Rules with >= 14 nodes integrate degree-<=5 spherical polynomials
        // exactly. Check a few monomials against closed-form sphere averages.
        for n in [14, 26, 50] {
            let rule = AngularRule::with_nodes(n).unwrap();
            let avg = |f: &dyn Fn([f64; 3]) -> f64| -> f64 {
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * f(*p))
                    .sum::<f64>()
                    / FOUR_PI
            };
            assert!((avg(&|p| p[2] * p[2]) - 1.0 / 3.0).abs() < 1e-12);
            assert!((avg(&|p| p[2].powi(4)) - 1.0 / 5.0).abs() < 1e-12);
            assert!((avg(&|p| p[0] * p[0] * p[1] * p[1]) - 1.0 / 15.0).abs() < 1e-12);
            assert!(avg(&|p| p[0] * p[1] * p[2]).abs() < 1e-13);
            assert!(avg(&|p| p[0].powi(5)).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let q = |f: &dyn Fn(f64) -> f64| x.iter().zip(&w).map(|(t, w)| w * f(*t)).sum::<f64>();
        assert!((q(&|_| 1.0) - 2.0).abs() < 1e-13);
        assert!((q(&|t| t * t) - 2.0 / 3.0).abs() < 1e-13);
        assert!((q(&|t| t.powi(8)) - 2.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn grid_weight_sum_and_symmetry() {
        let g = build_grid(6.0, 16, 14).unwrap();
        assert_eq!(g.len(), 4096);
        let total = g.w * g.len() as f64;
        assert!((total - 1728.0).abs() / 1728.0 < 1e-12);
        for k in (0..g.len()).step_by(97) {
            let neg = g.negated_index(k);
            for a in 0..3 {
                assert!((g.nodes[k][a] + g.nodes[neg][a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(6.0, 3, 14).is_err());
        assert!(build_grid(6.0, 15, 14).is_err());
        assert!(build_grid(-1.0, 16, 14).is_err());
        assert!(build_grid(6.0, 16, 4).is_err());
    }

    #[test]
    fn maxwellian_point_values() {
        let m0 = maxwellian([0.0, 0.0, 0.0]);
        assert!((m0 - (2.0 * std::f64::consts::PI).powf(-1.5)).abs() < 1e-15);
        assert!((m0 - 0.06349363593424097).abs() < 1e-12);
        let v = [1.0, 1.0, 0.0]; // |v|^2 = 2
        assert!((maxwellian(v) - m0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    /// 1-D Simpson quadrature oracle for the Gaussian mass on [-r, r].
    fn gaussian_mass_1d(r: f64) -> f64 {
        let n = 20_000;
        let h = 2.0 * r / n as f64;
        let g = |x: f64| (2.0 * std::f64::consts::PI).powf(-0.5) * (-0.5 * x * x).exp();
        let mut s = g(-r) + g(r);
        for i in 1..n {
            let x = -r + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(x);
        }
        s * h / 3.0
    }

    #[test]
    fn maxwellian_mass_matches_tail_oracle() {
        let g = build_grid(6.0, 16, 14).unwrap();
        let mass = g.w * g.maxw.m.iter().sum::<f64>();
        let expect = gaussian_mass_1d(6.0).powi(3);
        // Midpoint-rule boundary terms are O(h^2 M'(R)) ~ 5e-9 here.
        assert!((mass - expect).abs() < 1e-8, "mass {mass} vs {expect}");
        assert!(mass <= 1.0 + 1e-12 && mass > 0.9999);

        let g8 = build_grid(8.0, 24, 26).unwrap();
        let mass8 = g8.w * g8.maxw.m.iter().sum::<f64>();
        assert!(mass8 >= 0.9999);
        assert!((mass8 - gaussian_mass_1d(8.0).powi(3)).abs() < 1e-8);
    }

    #[test]
    fn quadrature_exact_on_low_moments() {
        let g = build_grid(6.0, 16, 14).unwrap();
        // Second moment against the 1-D oracle: int x^2 g(x) dx on [-R, R].
        let n = 20_000;
        let h = 2.0 * g.r / n as f64;
        let gg = |x: f64| (2.0 * std::f64::consts::PI).powf(-0.5) * (-0.5 * x * x).exp();
        let mut s2 = g.r * g.r * gg(g.r) * 2.0;
        for i in 1..n {
            let x = -g.r + i as f64 * h;
            s2 += if i % 2 == 1 { 4.0 } else { 2.0 } * x * x * gg(x);
        }
        s2 *= h / 3.0;
        let m1 = gaussian_mass_1d(g.r);
        let expect = s2 * m1 * m1;
        let got = g.w
            * g.nodes
                .iter()
                .zip(&g.maxw.m)
                .map(|(v, m)| v[0] * v[0] * m)
                .sum::<f64>();
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
    }

    /// Radial reduction of nu: for |v| = r,
    /// nu(r) = 2 pi (2 pi)^{-3/2} int_0^inf s^2 e^{-s^2/2}
    ///         ((r+s)^3 - |r-s|^3) / (3 r s) ds,
    /// with the r -> 0 limit 2s per the same formula.
    fn nu_radial_oracle(r: f64) -> f64 {
        let n = 200;
        let smax = 12.0;
        let h = smax / n as f64;
        let f = |s: f64| -> f64 {
            if s == 0.0 {
                return 0.0;
            }
            let angular = if r < 1e-12 {
                2.0 * s
            } else {
                ((r + s).powi(3) - (r - s).abs().powi(3)) / (3.0 * r * s)
            };
            s * s * (-0.5 * s * s).exp() * angular
        };
        let mut acc = f(0.0) + f(smax);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc *= h / 3.0;
        2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI).powf(-1.5)
            * 2.0
            * std::f64::consts::PI
            * acc
    }

    #[test]
    fn nu_matches_radial_oracle_and_brackets() {
        let g = build_grid(6.0, 16, 26).unwrap();
        let r0 = nu_radial_oracle(1e-13);
        let r4 = nu_radial_oracle(4.0);
        let g0 = collision_frequency([0.0, 0.0, 0.0], &g);
        let g4 = collision_frequency([4.0, 0.0, 0.0], &g);
        let ratio = g0 / g4;
        let expect = r0 / r4;
        assert!(
            (ratio - expect).abs() / expect < 0.01,
            "ratio {ratio} vs oracle {expect}"
        );

        // nu / <v> bracketed with modest spread on the default grid.
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for (v, nu) in g.nodes.iter().zip(&g.maxw.nu) {
            let br = (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let q = nu / br;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        assert!(lo > 0.0);
        assert!(hi / lo < 10.0, "c2/c1 = {}", hi / lo);
    }

    #[test]
    fn nu_even_and_radially_monotone() {
        let g = build_grid(5.0, 10, 14).unwrap();
        for k in 0..g.len() {
            let neg = g.negated_index(k);
            assert!((g.maxw.nu[k] - g.maxw.nu[neg]).abs() < 1e-11);
        }
        // Shell means wobble by the angular rule's anisotropy (a percent or
        // so of nu at large radii), so compare shells separated by at least
        // one lattice spacing, where the true slope dominates.
        let shells = g.radial_shells();
        let means: Vec<(f64, f64)> = shells
            .iter()
            .map(|(r, ks)| {
                (*r, ks.iter().map(|&k| g.maxw.nu[k]).sum::<f64>() / ks.len() as f64)
            })
            .collect();
        for i in 0..means.len() {
            for j in i + 1..means.len() {
                if means[j].0 - means[i].0 < g.h {
                    continue;
                }
                assert!(
                    means[j].1 >= means[i].1 - 1e-9,
                    "nu not monotone: r {} -> {} gives {} -> {}",
                    means[i].0,
                    means[j].0,
                    means[i].1,
                    means[j].1
                );
            }
        }
    }

    #[test]
    fn null_basis_orthonormal_and_spans_sqrt_m() {
        let g = build_grid(6.0, 12, 14).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let d = g.dot(&g.null.vectors[i], &g.null.vectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10, "<e{i},e{j}> = {d}");
            }
        }
        // sqrt(M) lies in the span: projecting reproduces it.
        let target = &g.maxw.sqrt_m;
        let mut recon = vec![0.0; g.len()];
        for e in &g.null.vectors {
            let c = g.dot(target, e);
            recon.iter_mut().zip(e).for_each(|(x, y)| *x += c * y);
        }
        let mut err2 = 0.0;
        let mut ref2 = 0.0;
        for (a, b) in recon.iter().zip(target) {
            err2 += (a - b) * (a - b);
            ref2 += b * b;
        }
        assert!((err2 / ref2).sqrt() < 1e-10);
    }

    #[test]
    fn v1_squared_projects_onto_even_moments_only() {
        let g = build_grid(6.0, 12, 14).unwrap();
        let target: Vec<f64> = g
            .nodes
            .iter()
            .zip(&g.maxw.sqrt_m)
            .map(|(v, s)| v[0] * v[0] * s)
            .collect();
        let coeffs: Vec<f64> = g
            .null
            .vectors
            .iter()
            .map(|e| g.dot(&target, e))
            .collect();
        assert!(coeffs[0].abs() > 1e-3);
        assert!(coeffs[4].abs() > 1e-3);
        for i in 1..4 {
            assert!(coeffs[i].abs() < 1e-12, "odd moment leaked: {}", coeffs[i]);
        }
    }

    #[test]
    fn coarse_grid_condition_guard_fires() {
        // A tiny cutoff makes 1 and |v|^2 nearly parallel.
        let err = build_grid(0.002, 4, 6).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("condition") || msg.contains("degenerate"), "{msg}");
    }
}
