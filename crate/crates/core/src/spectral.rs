//! Spatial spectral machinery on the periodic box: Fourier transforms,
//! Littlewood-Paley dyadic blocks, and Besov/Sobolev norm evaluation.
//!
//! The box `[0, L)^d` replaces the whole space; homogeneous norms are
//! computed from the discrete dyadic ladder with the zero mode excluded.
//! Fourier-series coefficients are used throughout, so the physical L^2
//! norm is `L^{d/2}` times the coefficient l^2 norm.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Periodic spatial grid: `n_x` points per axis on a box of side `box_length`,
/// in `dim` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub dim: usize,
    pub n_x: usize,
    pub box_length: f64,
}

impl SpatialGrid {
    pub fn new(dim: usize, n_x: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "spatial dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if n_x < 4 || n_x % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "spatial grid needs even n_x >= 4, got {n_x}"
            )));
        }
        if box_length <= 0.0 {
            return Err(Error::InvalidParameter("box length must be positive".into()));
        }
        Ok(SpatialGrid {
            dim,
            n_x,
            box_length,
        })
    }

    /// Total number of modes (= physical points).
    pub fn modes(&self) -> usize {
        self.n_x.pow(self.dim as u32)
    }

    /// Fundamental wavenumber 2 pi / L.
    pub fn xi0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    /// Signed FFT index of a 1-D position.
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        if i <= self.n_x / 2 {
            i as i64
        } else {
            i as i64 - self.n_x as i64
        }
    }

    /// Integer mode vector of a flat index (unused axes are zero).
    #[inline]
    pub fn mode_ivec(&self, flat: usize) -> [i64; 3] {
        let n = self.n_x;
        let mut out = [0i64; 3];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            out[a] = self.signed_index(rest % n);
            rest /= n;
        }
        out
    }

    /// Wavenumber vector of a flat index.
    #[inline]
    pub fn wavenumber(&self, flat: usize) -> [f64; 3] {
        let iv = self.mode_ivec(flat);
        let x0 = self.xi0();
        [iv[0] as f64 * x0, iv[1] as f64 * x0, iv[2] as f64 * x0]
    }

    #[inline]
    pub fn xi_norm(&self, flat: usize) -> f64 {
        let w = self.wavenumber(flat);
        (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
    }

    /// Largest resolvable |xi| (Nyquist corner).
    pub fn xi_max(&self) -> f64 {
        self.xi0() * (self.n_x as f64 / 2.0) * (self.dim as f64).sqrt()
    }

    /// Smallest nonzero |xi|.
    pub fn xi_min(&self) -> f64 {
        self.xi0()
    }

    /// Physical coordinates of flat index (cell origin convention x_i = i L / n).
    pub fn coord(&self, flat: usize) -> [f64; 3] {
        let n = self.n_x;
        let h = self.box_length / n as f64;
        let mut out = [0.0; 3];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            out[a] = (rest % n) as f64 * h;
            rest /= n;
        }
        out
    }

    /// Volume of the box.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }
}

/// d-dimensional complex FFT helper with cached plans.
pub struct Transform {
    grid: SpatialGrid,
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
}

impl Transform {
    pub fn new(grid: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        Transform {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(grid.n_x),
            inverse: planner.plan_fft_inverse(grid.n_x),
        }
    }

    fn apply_axes(&self, data: &mut [Complex64], fft: &Arc<dyn rustfft::Fft<f64>>) {
        let n = self.grid.n_x;
        let d = self.grid.dim;
        let total = self.grid.modes();
        debug_assert_eq!(data.len(), total);
        let mut scratch = vec![Complex64::ZERO; n];
        // Iterate axes; for each, gather lines, transform, scatter back.
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let lines = total / n;
            for line in 0..lines {
                // Decompose line index into the non-axis coordinates.
                let block = line / stride;
                let offset = line % stride;
                let base = block * stride * n + offset;
                for i in 0..n {
                    scratch[i] = data[base + i * stride];
                }
                fft.process(&mut scratch);
                for i in 0..n {
                    data[base + i * stride] = scratch[i];
                }
            }
        }
    }

    /// Physical samples -> series coefficients (normalized by N^d).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply_axes(data, &self.forward);
        let scale = 1.0 / self.grid.modes() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Series coefficients -> physical samples.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply_axes(data, &self.inverse);
    }
}

/// Physical L^2 norm of one spatial spectrum (series coefficients).
pub fn l2_norm(coeffs: &[Complex64], grid: &SpatialGrid) -> f64 {
    let s: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
    (grid.volume() * s).sqrt()
}

/// Smooth transition: 0 for t <= 0, 1 for t >= 1.
fn smoothstep(t: f64) -> f64 {
    let s =
        |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    let a = s(t);
    let b = s(1.0 - t);
    a / (a + b)
}

/// Dyadic Littlewood-Paley filter bank on a spatial grid.
///
/// `chi` is a smooth radial cutoff equal to 1 on B(0, 3/4) and supported in
/// B(0, 4/3); `phi(xi) = chi(xi/2) - chi(xi)` tiles every nonzero frequency.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicFilter {
    pub j_min: i32,
    pub j_max: i32,
}

impl DyadicFilter {
    /// Radial cutoff profile.
    pub fn chi(r: f64) -> f64 {
        1.0 - smoothstep((r - 0.75) / (4.0 / 3.0 - 0.75))
    }

    /// Annulus profile, supported in 3/4 <= r <= 8/3.
    pub fn phi(r: f64) -> f64 {
        Self::chi(r / 2.0) - Self::chi(r)
    }

    /// Block profile at dyadic level j.
    pub fn phi_j(&self, r: f64, j: i32) -> f64 {
        Self::phi(r * 2f64.powi(-j))
    }

    /// Low-pass profile `S_j` (sum of blocks below j).
    pub fn low_pass(r: f64, j: i32) -> f64 {
        Self::chi(r * 2f64.powi(-j))
    }

    /// Filter bank covering every nonzero mode of `grid` exactly: the block
    /// sum telescopes to chi(2^{-jmax-1} xi) - chi(2^{-jmin} xi), which is 1
    /// for all resolvable nonzero xi by the choice of range.
    pub fn for_grid(grid: &SpatialGrid) -> DyadicFilter {
        let j_max = (grid.xi_max() / 0.75).log2().ceil() as i32;
        let j_min = (grid.xi_min() * 3.0 / 8.0).log2().floor() as i32;
        DyadicFilter { j_min, j_max }
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// Apply the dyadic block at level j to a spectrum in place.
    pub fn apply_block(&self, coeffs: &mut [Complex64], grid: &SpatialGrid, j: i32) {
        for (flat, z) in coeffs.iter_mut().enumerate() {
            let r = grid.xi_norm(flat);
            *z *= self.phi_j(r, j);
        }
    }

    /// Per-level L^2 norms of the blocks of one spatial spectrum, zero mode
    /// excluded.
    pub fn block_l2(&self, coeffs: &[Complex64], grid: &SpatialGrid) -> Vec<f64> {
        let mut acc = vec![0.0f64; (self.j_max - self.j_min + 1) as usize];
        for (flat, z) in coeffs.iter().enumerate() {
            let r = grid.xi_norm(flat);
            if r == 0.0 {
                continue;
            }
            let p = z.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for j in self.levels() {
                let f = self.phi_j(r, j);
                if f > 0.0 {
                    acc[(j - self.j_min) as usize] += f * f * p;
                }
            }
        }
        acc.iter()
            .map(|s| (grid.volume() * s).sqrt())
            .collect()
    }

    /// Homogeneous Besov norm of one spatial spectrum.
    pub fn besov(&self, coeffs: &[Complex64], grid: &SpatialGrid, s: f64, q: BesovQ) -> f64 {
        let blocks = self.block_l2(coeffs, grid);
        combine_blocks(&blocks, self.j_min, s, q)
    }
}

/// The summability indices used by the norms (q in {1, 2, inf}).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesovQ {
    One,
    Two,
    Inf,
}

/// Weighted l^q combination of per-level block norms.
pub fn combine_blocks(blocks: &[f64], j_min: i32, s: f64, q: BesovQ) -> f64 {
    let weighted = blocks
        .iter()
        .enumerate()
        .map(|(idx, b)| 2f64.powf(s * (j_min + idx as i32) as f64) * b);
    match q {
        BesovQ::One => weighted.sum(),
        BesovQ::Two => weighted.map(|x| x * x).sum::<f64>().sqrt(),
        BesovQ::Inf => weighted.fold(0.0, f64::max),
    }
}

/// Homogeneous Sobolev norm `|| |xi|^s g ||` of one spatial spectrum. The
/// zero mode is excluded for s != 0 (and contributes |g(0)| for s = 0, where
/// the norm is plain L^2).
pub fn sobolev(coeffs: &[Complex64], grid: &SpatialGrid, s: f64) -> f64 {
    let mut acc = 0.0;
    for (flat, z) in coeffs.iter().enumerate() {
        let r = grid.xi_norm(flat);
        if r == 0.0 {
            if s == 0.0 {
                acc += z.norm_sqr();
            }
            continue;
        }
        acc += r.powf(2.0 * s) * z.norm_sqr();
    }
    (grid.volume() * acc).sqrt()
}

/// Low/high split at level j0: low part is the multiplier chi(2^{-j0} xi).
pub fn low_high_split(
    coeffs: &[Complex64],
    grid: &SpatialGrid,
    j0: i32,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut low = vec![Complex64::ZERO; coeffs.len()];
    let mut high = vec![Complex64::ZERO; coeffs.len()];
    for (flat, z) in coeffs.iter().enumerate() {
        let c = DyadicFilter::low_pass(grid.xi_norm(flat), j0);
        low[flat] = z * c;
        high[flat] = z * (1.0 - c);
    }
    (low, high)
}

/// A labelled collection of norm values; serializes to JSON.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NormReport {
    pub entries: BTreeMap<String, f64>,
}

impl NormReport {
    pub fn insert(&mut self, label: impl Into<String>, value: f64) {
        self.entries.insert(label.into(), value);
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.get(label).copied()
    }

    /// All entries must be finite and nonnegative.
    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.entries {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Numerical(format!("norm entry {k} = {v}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("norm report serializes")
    }
}

/// Synthesize a random mean-free spatial spectrum with a power-law profile
/// |g(xi)| ~ |xi|^{-decay}, Hermitian-symmetric so the physical field is real.
pub fn random_real_spectrum(
    grid: &SpatialGrid,
    decay: f64,
    seed: u64,
    stream: u64,
) -> Vec<Complex64> {
    let mut rng = crate::rng::CounterRng::new(seed, stream);
    let total = grid.modes();
    let mut coeffs = vec![Complex64::ZERO; total];
    for flat in 0..total {
        let r = grid.xi_norm(flat);
        if r == 0.0 {
            continue;
        }
        let amp = r.powf(-decay);
        coeffs[flat] = Complex64::new(rng.normal(), rng.normal()) * amp;
    }
    hermitianize(&mut coeffs, grid);
    coeffs
}

/// Enforce Hermitian symmetry g(-xi) = conj(g(xi)).
pub fn hermitianize(coeffs: &mut [Complex64], grid: &SpatialGrid) {
    let n = grid.n_x as i64;
    let total = grid.modes();
    for flat in 0..total {
        let iv = grid.mode_ivec(flat);
        let neg = flat_of_ivec(grid, [-iv[0], -iv[1], -iv[2]]);
        if neg < flat {
            continue;
        }
        if neg == flat {
            coeffs[flat] = Complex64::new(coeffs[flat].re, 0.0);
        } else {
            let avg = 0.5 * (coeffs[flat] + coeffs[neg].conj());
            coeffs[flat] = avg;
            coeffs[neg] = avg.conj();
        }
    }
    let _ = n;
}

/// Flat index of an integer mode vector (indices taken mod n).
pub fn flat_of_ivec(grid: &SpatialGrid, iv: [i64; 3]) -> usize {
    let n = grid.n_x as i64;
    let mut flat = 0usize;
    for a in 0..grid.dim {
        let w = iv[a].rem_euclid(n) as usize;
        flat = flat * grid.n_x + w;
    }
    flat
}

/// Hermitian-symmetry residual (exact zero for real fields).
pub fn hermitian_residual(coeffs: &[Complex64], grid: &SpatialGrid) -> f64 {
    let mut worst = 0.0f64;
    for flat in 0..grid.modes() {
        let iv = grid.mode_ivec(flat);
        let neg = flat_of_ivec(grid, [-iv[0], -iv[1], -iv[2]]);
        worst = worst.max((coeffs[flat] - coeffs[neg].conj()).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> SpatialGrid {
        SpatialGrid::new(3, 16, 2.0 * std::f64::consts::PI * 4.0).unwrap()
    }

    #[test]
    fn chi_profile_shape() {
        assert_eq!(DyadicFilter::chi(0.0), 1.0);
        assert_eq!(DyadicFilter::chi(0.74), 1.0);
        assert_eq!(DyadicFilter::chi(4.0 / 3.0 + 1e-9), 0.0);
        let mut prev = 1.0;
        for i in 0..100 {
            let r = 0.75 + (4.0 / 3.0 - 0.75) * i as f64 / 99.0;
            let c = DyadicFilter::chi(r);
            assert!(c <= prev + 1e-12, "chi not non-increasing");
            prev = c;
        }
    }

    #[test]
    fn partition_of_unity_exact_on_grid() {
        let grid = grid3();
        let filter = DyadicFilter::for_grid(&grid);
        for flat in 0..grid.modes() {
            let r = grid.xi_norm(flat);
            if r == 0.0 {
                continue;
            }
            let total: f64 = filter.levels().map(|j| filter.phi_j(r, j)).sum();
            assert!(
                (total - 1.0).abs() < 1e-12,
                "partition at |xi|={r}: {total}"
            );
        }
    }

    #[test]
    fn phi_support_bounds() {
        for j in -3..4 {
            for i in 0..400 {
                let r = 1e-3 + i as f64 * 0.05;
                let f = DyadicFilter::phi(r * 2f64.powi(-j));
                if f.abs() > 0.0 {
                    let scaled = r * 2f64.powi(-j);
                    assert!((0.75..=8.0 / 3.0).contains(&scaled), "support violated at {scaled}");
                }
            }
        }
    }

    #[test]
    fn blocks_two_apart_are_disjoint() {
        // phi(2^{-j} xi) phi(2^{-k} xi) = 0 whenever |j - k| >= 2.
        for i in 0..2000 {
            let r = 1e-3 * 1.01f64.powi(i);
            for j in -2..3 {
                for k in -2..3 {
                    if (j - k as i32).abs() >= 2 {
                        let p = DyadicFilter::phi(r * 2f64.powi(-j))
                            * DyadicFilter::phi(r * 2f64.powi(-k));
                        assert_eq!(p, 0.0, "overlap at r={r}, j={j}, k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn single_mode_reconstructs_from_three_blocks() {
        let grid = grid3();
        let filter = DyadicFilter::for_grid(&grid);
        // Mode with |xi| = 2^1: with L = 8 pi, xi0 = 0.25, index (8,0,0).
        let mut coeffs = vec![Complex64::ZERO; grid.modes()];
        let flat = flat_of_ivec(&grid, [8, 0, 0]);
        coeffs[flat] = Complex64::new(1.0, 0.0);
        let r = grid.xi_norm(flat);
        assert!((r - 2.0).abs() < 1e-12);
        let j = 1;
        let total: f64 = (j - 1..=j + 1).map(|jj| filter.phi_j(r, jj)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for jj in filter.levels() {
            if (jj - j).abs() > 1 {
                assert_eq!(filter.phi_j(r, jj), 0.0);
            }
        }
    }

    #[test]
    fn reconstruction_parseval_for_random_fields() {
        let grid = grid3();
        let filter = DyadicFilter::for_grid(&grid);
        let coeffs = random_real_spectrum(&grid, 0.0, 42, 0);
        // Sum of blocks reconstructs g minus its mean...
        let mut recon = vec![Complex64::ZERO; grid.modes()];
        for j in filter.levels() {
            let mut block = coeffs.clone();
            filter.apply_block(&mut block, &grid, j);
            for (a, b) in recon.iter_mut().zip(&block) {
                *a += b;
            }
        }
        let mut err = 0.0f64;
        for flat in 0..grid.modes() {
            let expect = if grid.xi_norm(flat) == 0.0 {
                Complex64::ZERO
            } else {
                coeffs[flat]
            };
            err = err.max((recon[flat] - expect).norm());
        }
        assert!(err < 1e-12, "reconstruction error {err}");
        // ...so physical L2 identities hold: ||sum_j block_j||^2 = ||g||^2 - V |mean|^2.
        let total = l2_norm(&coeffs, &grid);
        let mean = coeffs[0].norm();
        let recon_norm = l2_norm(&recon, &grid);
        let expect = (total * total - grid.volume() * mean * mean).sqrt();
        assert!((recon_norm - expect).abs() < 1e-8 * total.max(1.0));
        // The raw block energies form a frame bounded by the total energy.
        let blocks = filter.block_l2(&coeffs, &grid);
        let sum2: f64 = blocks.iter().map(|b| b * b).sum();
        assert!(sum2 <= total * total * (1.0 + 1e-12));
        assert!(sum2 >= 0.25 * expect * expect);
    }

    #[test]
    fn bernstein_ratios_within_support_bounds() {
        let grid = grid3();
        let filter = DyadicFilter::for_grid(&grid);
        let coeffs = random_real_spectrum(&grid, 0.5, 7, 1);
        for j in filter.levels() {
            let mut block = coeffs.clone();
            filter.apply_block(&mut block, &grid, j);
            let base = l2_norm(&block, &grid);
            if base < 1e-12 {
                continue;
            }
            // Spectral gradient.
            let mut grad2 = 0.0;
            for (flat, z) in block.iter().enumerate() {
                let r = grid.xi_norm(flat);
                grad2 += (r * r) * z.norm_sqr();
            }
            let grad = (grid.volume() * grad2).sqrt();
            let ratio = grad / base / 2f64.powi(j);
            assert!(
                (0.75 - 1e-9..=8.0 / 3.0 + 1e-9).contains(&ratio),
                "Bernstein ratio {ratio} at j={j}"
            );
        }
    }

    #[test]
    fn besov_norms_on_single_shell() {
        let grid = grid3();
        let filter = DyadicFilter::for_grid(&grid);
        // Field concentrated where block j = 0 is identically one
        // (4/3 <= |xi| <= 3/2), so that single block owns all the mass.
        let mut coeffs = vec![Complex64::ZERO; grid.modes()];
        for flat in 0..grid.modes() {
            let r = grid.xi_norm(flat);
            if (1.35..1.49).contains(&r) {
                coeffs[flat] = Complex64::new(0.3, 0.1);
            }
        }
        hermitianize(&mut coeffs, &grid);
        let l2 = l2_norm(&coeffs, &grid);
        assert!(l2 > 0.0);
        for s in [-0.5, 0.0, 0.5, 1.0] {
            let b = filter.besov(&coeffs, &grid, s, BesovQ::Inf);
            assert!(
                (b / l2 - 1.0).abs() < 1e-12,
                "s={s}: Besov {b} vs L2 {l2}"
            );
        }
    }

    #[test]
    fn embedding_chain_on_random_fields() {
        let grid = SpatialGrid::new(3, 8, 8.0 * std::f64::consts::PI).unwrap();
        let filter = DyadicFilter::for_grid(&grid);
        for seed in 0..50 {
            let coeffs = random_real_spectrum(&grid, 0.7, seed, 2);
            let b21_1 = filter.besov(&coeffs, &grid, 0.0, BesovQ::One);
            let b2inf = filter.besov(&coeffs, &grid, 0.0, BesovQ::Inf);
            let mut mean_free = coeffs.clone();
            mean_free[0] = Complex64::ZERO;
            let l2 = l2_norm(&mean_free, &grid);
            assert!(b2inf <= l2 * (1.0 + 1e-9), "B0_{{2,inf}} > L2");
            assert!(l2 <= b21_1 * (1.0 + 1e-9), "L2 > B0_{{2,1}}");
        }
    }

    #[test]
    fn interpolation_inequality_constant_is_stable() {
        // || g ||_{B^{(s1+s2)/2}_{2,1}} <= C ||g||^{1/2}_{B^{s1}_{2,inf}} ||g||^{1/2}_{B^{s2}_{2,inf}}
        let measure = |n_x: usize| -> f64 {
            let grid = SpatialGrid::new(3, n_x, 16.0 * std::f64::consts::PI).unwrap();
            let filter = DyadicFilter::for_grid(&grid);
            let (s1, s2) = (-0.5, 1.0);
            let mut c = 0.0f64;
            for seed in 0..30 {
                let coeffs = random_real_spectrum(&grid, 0.8, seed, 3);
                let num = filter.besov(&coeffs, &grid, 0.5 * (s1 + s2), BesovQ::One);
                let d1 = filter.besov(&coeffs, &grid, s1, BesovQ::Inf);
                let d2 = filter.besov(&coeffs, &grid, s2, BesovQ::Inf);
                c = c.max(num / (d1 * d2).sqrt());
            }
            c
        };
        let c8 = measure(8);
        let c16 = measure(16);
        assert!(c8.is_finite() && c16.is_finite());
        assert!(c16 / c8 < 2.5, "interpolation constant unstable: {c8} vs {c16}");
    }

    #[test]
    fn gradient_shifts_besov_index() {
        let grid = grid3();
        let filter = DyadicFilter::for_grid(&grid);
        let coeffs = random_real_spectrum(&grid, 1.0, 11, 4);
        // Compare || grad g ||_{B^s_{2,inf}} with || g ||_{B^{s+1}_{2,inf}}
        // blockwise: the ratio per block lies in the Bernstein bracket.
        let s = -0.25;
        let mut grad_blocks = Vec::new();
        let mut shift_blocks = Vec::new();
        for j in filter.levels() {
            let mut block = coeffs.clone();
            filter.apply_block(&mut block, &grid, j);
            let mut g2 = 0.0;
            for (flat, z) in block.iter().enumerate() {
                let r = grid.xi_norm(flat);
                g2 += r * r * z.norm_sqr();
            }
            grad_blocks.push(2f64.powf(s * j as f64) * (grid.volume() * g2).sqrt());
            shift_blocks.push(2f64.powf((s + 1.0) * j as f64) * l2_norm(&block, &grid));
        }
        let grad_norm = grad_blocks.iter().cloned().fold(0.0, f64::max);
        let shift_norm = shift_blocks.iter().cloned().fold(0.0, f64::max);
        let ratio = grad_norm / shift_norm;
        assert!(
            (0.7..=2.7).contains(&ratio),
            "norm equivalence ratio {ratio}"
        );
    }

    #[test]
    fn product_estimate_measured_constant() {
        // || g1 g2 ||_{B^{s1+s2-3/2}_{2,inf}} <= C ||g1||_{B^{s1}_{2,1}} ||g2||_{B^{s2}_{2,inf}} (d = 3).
        let grid = SpatialGrid::new(3, 16, 8.0 * std::f64::consts::PI).unwrap();
        let filter = DyadicFilter::for_grid(&grid);
        let tf = Transform::new(&grid);
        let (s1, s2) = (1.0, 0.5);
        let mut cmax = 0.0f64;
        for seed in 0..20 {
            let c1 = random_real_spectrum(&grid, 1.2, seed, 5);
            let c2 = random_real_spectrum(&grid, 0.9, seed, 6);
            let mut p1 = c1.clone();
            let mut p2 = c2.clone();
            tf.inverse(&mut p1);
            tf.inverse(&mut p2);
            let mut prod: Vec<Complex64> = p1
                .iter()
                .zip(&p2)
                .map(|(a, b)| Complex64::new(a.re * b.re, 0.0))
                .collect();
            tf.forward(&mut prod);
            let lhs = filter.besov(&prod, &grid, s1 + s2 - 1.5, BesovQ::Inf);
            let r1 = filter.besov(&c1, &grid, s1, BesovQ::One);
            let r2 = filter.besov(&c2, &grid, s2, BesovQ::Inf);
            cmax = cmax.max(lhs / (r1 * r2));
        }
        assert!(cmax.is_finite() && cmax > 0.0 && cmax < 10.0, "C = {cmax}");
    }

    #[test]
    fn low_high_split_reconstructs() {
        let grid = grid3();
        let coeffs = random_real_spectrum(&grid, 0.5, 3, 7);
        let (low, high) = low_high_split(&coeffs, &grid, 0);
        for flat in 0..grid.modes() {
            let sum = low[flat] + high[flat];
            assert!((sum - coeffs[flat]).norm() < 1e-12);
            let r = grid.xi_norm(flat);
            if low[flat].norm() > 0.0 && r > 0.0 {
                assert!(r <= 4.0 / 3.0 + 1e-9, "low part leaked to |xi| = {r}");
            }
        }
        // Energy split: cross-term only from the transition annulus.
        let t2 = l2_norm(&coeffs, &grid).powi(2);
        let l2 = l2_norm(&low, &grid).powi(2);
        let h2 = l2_norm(&high, &grid).powi(2);
        let cross = t2 - l2 - h2;
        let mut bound = 0.0;
        for (flat, z) in coeffs.iter().enumerate() {
            let c = DyadicFilter::low_pass(grid.xi_norm(flat), 0);
            if c > 0.0 && c < 1.0 {
                bound += 2.0 * c * (1.0 - c) * z.norm_sqr() * grid.volume();
            }
        }
        assert!((cross - bound).abs() < 1e-9 * t2);
    }

    #[test]
    fn fft_roundtrip_and_parseval() {
        for dim in 1..=3usize {
            let grid = SpatialGrid::new(dim, 16, 5.0).unwrap();
            let tf = Transform::new(&grid);
            let coeffs = random_real_spectrum(&grid, 0.3, 9, dim as u64);
            let mut phys = coeffs.clone();
            tf.inverse(&mut phys);
            // Real field.
            let max_im = phys.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            assert!(max_im < 1e-10);
            // Parseval: V sum |coef|^2 == (V / N) sum |phys|^2.
            let spec2: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
            let phys2: f64 = phys.iter().map(|z| z.norm_sqr()).sum();
            assert!(
                (grid.volume() * spec2 - grid.volume() / grid.modes() as f64 * phys2).abs()
                    < 1e-10 * (1.0 + grid.volume() * spec2)
            );
            let mut back = phys.clone();
            tf.forward(&mut back);
            let err = back
                .iter()
                .zip(&coeffs)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12);
            assert!(hermitian_residual(&coeffs, &grid) < 1e-12);
        }
    }
}
