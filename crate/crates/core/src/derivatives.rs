//! Finite-difference derivatives on the velocity lattice.
//!
//! Interior points use the 4th-order centered five-point stencil; the two
//! layers nearest each boundary close with 2nd-order centered/one-sided
//! stencils. The distribution is negligible at the velocity-box boundary
//! when the cutoff radius is adequate, which the solver monitors.

use num_complex::Complex64;

use crate::velocity::VelocityGrid;

/// One-dimensional differentiation weights per row (dense n_v x n_v, tiny).
#[derive(Clone, Debug)]
pub struct Stencil1D {
    pub n: usize,
    pub weights: Vec<f64>,
}

impl Stencil1D {
    /// First-derivative stencil on n uniform points with spacing h.
    pub fn first_derivative(n: usize, h: f64) -> Stencil1D {
        assert!(n >= 5, "stencil needs at least 5 points");
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            let row = &mut w[i * n..(i + 1) * n];
            if i == 0 {
                row[0] = -1.5 / h;
                row[1] = 2.0 / h;
                row[2] = -0.5 / h;
            } else if i == 1 || i == n - 2 {
                row[i - 1] = -0.5 / h;
                row[i + 1] = 0.5 / h;
            } else if i == n - 1 {
                row[n - 1] = 1.5 / h;
                row[n - 2] = -2.0 / h;
                row[n - 3] = 0.5 / h;
            } else {
                row[i - 2] = 1.0 / (12.0 * h);
                row[i - 1] = -8.0 / (12.0 * h);
                row[i + 1] = 8.0 / (12.0 * h);
                row[i + 2] = -1.0 / (12.0 * h);
            }
        }
        Stencil1D { n, weights: w }
    }
}

/// Velocity-gradient operator on the 3-D lattice.
#[derive(Clone, Debug)]
pub struct VelocityDerivative {
    stencil: Stencil1D,
    n: usize,
}

impl VelocityDerivative {
    pub fn new(grid: &VelocityGrid) -> Self {
        VelocityDerivative {
            stencil: Stencil1D::first_derivative(grid.n_v, grid.h),
            n: grid.n_v,
        }
    }

    /// d/dv_axis applied to nodal values (real).
    pub fn apply(&self, values: &[f64], axis: usize) -> Vec<f64> {
        self.apply_generic(values, axis)
    }

    /// d/dv_axis applied to nodal values (complex).
    pub fn apply_complex(&self, values: &[Complex64], axis: usize) -> Vec<Complex64> {
        self.apply_generic(values, axis)
    }

    fn apply_generic<T>(&self, values: &[T], axis: usize) -> Vec<T>
    where
        T: Copy
            + Default
            + std::ops::Add<Output = T>
            + std::ops::Mul<f64, Output = T>,
    {
        let n = self.n;
        assert_eq!(values.len(), n * n * n);
        assert!(axis < 3);
        let mut out = vec![T::default(); values.len()];
        //

        let stride = match axis {
            0 => n * n,
            1 => n,
            _ => 1,
        };
        let lines = values.len() / n;
        for line in 0..lines {
            let block = line / stride;
            let offset = line % stride;
            let base = block * stride * n + offset;
            for i in 0..n {
                let row = &self.stencil.weights[i * n..(i + 1) * n];
                let mut acc = T::default();
                for (j, wj) in row.iter().enumerate() {
                    if *wj != 0.0 {
                        acc = acc + values[base + j * stride] * *wj;
                    }
                }
                out[base + i * stride] = acc;
            }
        }
        out
    }

    /// Apply a velocity multi-index derivative by repeated first derivatives.
    pub fn apply_multi_complex(&self, values: &[Complex64], beta: [usize; 3]) -> Vec<Complex64> {
        let mut cur = values.to_vec();
        for (axis, &count) in beta.iter().enumerate() {
            for _ in 0..count {
                cur = self.apply_complex(&cur, axis);
            }
        }
        cur
    }
}

/// All velocity multi-indices with 1 <= |beta| <= max_order.
pub fn velocity_multi_indices(max_order: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for total in 1..=max_order {
        for b1 in 0..=total {
            for b2 in 0..=(total - b1) {
                out.push([b1, b2, total - b1 - b2]);
            }
        }
    }
    out
}
