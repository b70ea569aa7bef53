//! External force fields: potential, rotational non-potential, spectral
//! custom fields, and time-periodic modulations.
//!
//! Closed-form fields live in coordinates centered on the box. The
//! rotational field is periodized by a smooth radial window equal to 1 on
//! the inner 80 percent of the inscribed sphere, which keeps both the
//! divergence identity and the curl at the origin exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{
    hermitianize,BesovQ, DyadicFilter, NormReport, SpatialGrid, Transform,
};
use crate::{Error, Result};

/// Temporal modulation profile theta(t) with theta(t + T) = theta(t).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Constant,
    Sin,
    SquareSmoothed,
}

impl Profile {
    /// Modulation at integer phase `num / den` of the period. Integer
    /// reduction makes the periodicity and half-period antisymmetry exact
    /// in floating point.
    pub fn at_fraction(&self, num: u64, den: u64) -> f64 {
        debug_assert!(den > 0);
        let num = num % den;
        match self {
            Profile::Constant => 1.0,
            Profile::Sin => {
                // Quarter-period symmetry reduction (exact for even den).
                let half = den / 2;
                let (sign, mut n) = if 2 * num >= den {
                    (-1.0, num - half)
                } else {
                    (1.0, num)
                };
                if den % 2 == 1 {
                    // Odd denominators cannot reduce exactly; fall back.
                    return (2.0 * std::f64::consts::PI * num as f64 / den as f64).sin();
                }
                if 2 * n > half {
                    n = half - n;
                }
                sign * (2.0 * std::f64::consts::PI * n as f64 / den as f64).sin()
            }
            Profile::SquareSmoothed => {
                let half = den / 2;
                let (sign, n) = if den % 2 == 0 && num >= half {
                    (-1.0, num - half)
                } else {
                    (1.0, num)
                };
                let u = n as f64 / den as f64; // in [0, 1/2)
                sign * square_bump(u)
            }
        }
    }

    /// Continuous-time evaluation (reduced phase; periodic but not bit-exact
    /// across arbitrary float arithmetic -- the solver uses `at_fraction`).
    pub fn at_time(&self, t: f64, period: f64) -> f64 {
        let phase = (t / period).rem_euclid(1.0);
        match self {
            Profile::Constant => 1.0,
            Profile::Sin => (2.0 * std::f64::consts::PI * phase).sin(),
            Profile::SquareSmoothed => {
                if phase < 0.5 {
                    square_bump(phase)
                } else {
                    -square_bump(phase - 0.5)
                }
            }
        }
    }
}

/// Smooth bump on [0, 1/2]: ramps up over [0, 0.1], flat 1 on [0.1, 0.4],
/// ramps down over [0.4, 0.5].
fn square_bump(u: f64) -> f64 {
    let edge = |t: f64| {
        let s = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
        let a = s(t);
        a / (a + s(1.0 - t))
    };
    if u < 0.1 {
        edge(u / 0.1)
    } else if u <= 0.4 {
        1.0
    } else {
        edge((0.5 - u) / 0.1)
    }
}

/// Kind of force field, kept for reporting.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForceKind {
    Zero,
    /// E = -grad(phi) for a band-limited potential.
    Potential,
    /// Windowed rotational field around the x3 axis.
    Rotational { epsilon: f64, m: f64 },
    CustomSpectral,
}

/// A time-periodic-capable external force field on the box.
#[derive(Clone, Debug)]
pub struct ForceField {
    pub space: SpatialGrid,
    pub kind: ForceKind,
    /// None for stationary fields (periodic with every period).
    pub period: Option<f64>,
    pub profile: Profile,
    /// Spectral coefficients of the spatial profile, per component.
    pub coeffs: [Vec<Complex64>; 3],
    /// Physical samples of the spatial profile, per component.
    pub physical: [Vec<f64>; 3],
}

impl ForceField {
    pub fn zero(space: SpatialGrid) -> Self {
        let n = space.modes();
        ForceField {
            space,
            kind: ForceKind::Zero,
            period: None,
            profile: Profile::Constant,
            coeffs: [vec![Complex64::ZERO; n], vec![Complex64::ZERO; n], vec![
                Complex64::ZERO;
                n
            ]],
            physical: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ForceKind::Zero)
    }

    /// `E = -grad(phi)` from the spectral coefficients of the potential;
    /// stationary. The gradient is exact in the spectral representation.
    pub fn potential(space: SpatialGrid, phi_coeffs: &[Complex64]) -> Result<Self> {
        if phi_coeffs.len() != space.modes() {
            return Err(Error::InvalidParameter(
                "potential coefficient count does not match the grid".into(),
            ));
        }
        let tf = Transform::new(&space);
        let n = space.modes();
        let mut coeffs = [vec![Complex64::ZERO; n], vec![Complex64::ZERO; n], vec![
            Complex64::ZERO;
            n
        ]];
        for flat in 0..n {
            let xi = space.wavenumber(flat);
            for a in 0..space.dim {
                coeffs[a][flat] = -Complex64::i() * xi[a] * phi_coeffs[flat];
            }
        }
        // Spectral differentiation leaves pure-imaginary content on the
        // self-conjugate (Nyquist) modes; drop it to keep the field real.
        for a in 0..space.dim {
            hermitianize(&mut coeffs[a], &space);
        }
        let mut physical = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for a in 0..3 {
            let mut buf = coeffs[a].clone();
            tf.inverse(&mut buf);
            physical[a] = buf.iter().map(|z| z.re).collect();
        }
        Ok(ForceField {
            space,
            kind: ForceKind::Potential,
            period: None,
            profile: Profile::Constant,
            coeffs,
            physical,
        })
    }

    /// Band-limited Gaussian-bump potential centered in the box:
    /// `phi(x) = amplitude * exp(-|x_c|^2 / (2 sigma^2))`, projected onto the
    /// resolvable modes. Returns the potential coefficients for reuse.
    pub fn gaussian_potential_coeffs(
        space: &SpatialGrid,
        amplitude: f64,
        sigma: f64,
    ) -> Vec<Complex64> {
        let tf = Transform::new(space);
        let n = space.modes();
        let mut phi = vec![Complex64::ZERO; n];
        let half = space.box_length / 2.0;
        for flat in 0..n {
            let x = space.coord(flat);
            let mut q = 0.0;
            for a in 0..space.dim {
                let c = x[a] - half;
                q += c * c;
            }
            phi[flat] = Complex64::new(amplitude * (-q / (2.0 * sigma * sigma)).exp(), 0.0);
        }
        tf.forward(&mut phi);
        hermitianize(&mut phi, space);
        phi
    }

    /// Windowed rotational field around the x3 axis,
    /// `E = eps (-x2, x1, 0) / <x>^{2m}` in centered coordinates.
    pub fn rotational(space: SpatialGrid, epsilon: f64, m: f64) -> Result<Self> {
        if m <= 2.0 {
            return Err(Error::InvalidParameter(format!(
                "rotational decay exponent must exceed 2, got {m}"
            )));
        }
        if space.dim != 3 {
            return Err(Error::InvalidParameter(
                "rotational field is three-dimensional".into(),
            ));
        }
        let tf = Transform::new(&space);
        let n = space.modes();
        let mut physical = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let half = space.box_length / 2.0;
        for flat in 0..n {
            let xc = space.coord(flat);
            let x = [xc[0] - half, xc[1] - half, xc[2] - half];
            let e = rotational_value(epsilon, m, x, space.box_length);
            for a in 0..3 {
                physical[a][flat] = e[a];
            }
        }
        let mut coeffs = [vec![Complex64::ZERO; n], vec![Complex64::ZERO; n], vec![
            Complex64::ZERO;
            n
        ]];
        for a in 0..3 {
            let mut buf: Vec<Complex64> =
                physical[a].iter().map(|x| Complex64::new(*x, 0.0)).collect();
            tf.forward(&mut buf);
            hermitianize(&mut buf, &space);
            coeffs[a] = buf;
        }
        Ok(ForceField {
            space,
            kind: ForceKind::Rotational { epsilon, m },
            period: None,
            profile: Profile::Constant,
            coeffs,
            physical,
        })
    }

    /// Custom spatial profile from spectral coefficients per component.
    pub fn custom_spectral(space: SpatialGrid, coeffs: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &coeffs {
            if c.len() != space.modes() {
                return Err(Error::InvalidParameter(
                    "custom spectral coefficient count does not match the grid".into(),
                ));
            }
        }
        let tf = Transform::new(&space);
        let mut physical = [Vec::new(), Vec::new(), Vec::new()];
        for a in 0..3 {
            let mut buf = coeffs[a].clone();
            tf.inverse(&mut buf);
            physical[a] = buf.iter().map(|z| z.re).collect();
        }
        Ok(ForceField {
            space,
            kind: ForceKind::CustomSpectral,
            period: None,
            profile: Profile::Constant,
            coeffs,
            physical,
        })
    }

    /// Attach a periodic temporal modulation.
    pub fn with_modulation(mut self, period: f64, profile: Profile) -> Result<Self> {
        if period <= 0.0 {
            return Err(Error::InvalidParameter("period must be positive".into()));
        }
        self.period = Some(period);
        self.profile = profile;
        Ok(self)
    }

    /// theta at integer step `step` with `steps_per_period` steps per period.
    pub fn modulation_at_step(&self, step: u64, steps_per_period: u64) -> f64 {
        match self.period {
            None => 1.0,
            Some(_) => self.profile.at_fraction(step % steps_per_period, steps_per_period),
        }
    }

    /// theta at continuous time.
    pub fn modulation_at_time(&self, t: f64) -> f64 {
        match self.period {
            None => 1.0,
            Some(period) => self.profile.at_time(t, period),
        }
    }

    /// E(t, x) at a physical sample point (by flat index).
    pub fn eval_at(&self, flat: usize, t: f64) -> [f64; 3] {
        let th = self.modulation_at_time(t);
        [
            th * self.physical[0][flat],
            th * self.physical[1][flat],
            th * self.physical[2][flat],
        ]
    }

    /// Largest |E| over the grid (spatial profile).
    pub fn max_amplitude(&self) -> f64 {
        let mut best = 0.0f64;
        for flat in 0..self.space.modes() {
            let e2 = (0..3).map(|a| self.physical[a][flat].powi(2)).sum::<f64>();
            best = best.max(e2.sqrt());
        }
        best
    }

    /// Spectral divergence samples (i xi . E_hat), inverse transformed.
    pub fn spectral_divergence_linf(&self) -> f64 {
        let tf = Transform::new(&self.space);
        let n = self.space.modes();
        let mut div = vec![Complex64::ZERO; n];
        for flat in 0..n {
            let xi = self.space.wavenumber(flat);
            let mut acc = Complex64::ZERO;
            for a in 0..3 {
                acc += Complex64::i() * xi[a] * self.coeffs[a][flat];
            }
            div[flat] = acc;
        }
        tf.inverse(&mut div);
        div.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Norm report of the spatial profile: the low-regularity Besov norm,
    /// the homogeneous H^N seminorm, and the inhomogeneous H^N norm.
    pub fn norm_report(&self, n_order: usize) -> NormReport {
        let filter = DyadicFilter::for_grid(&self.space);
        let mut besov2 = 0.0;
        let mut hn2 = 0.0;
        let mut full2 = 0.0;
        for a in 0..3 {
            let b = filter.besov(&self.coeffs[a], &self.space, -1.5, BesovQ::Inf);
            besov2 += b * b;
            let s = crate::spectral::sobolev(&self.coeffs[a], &self.space, n_order as f64);
            hn2 += s * s;
            for k in 0..=n_order {
                let sk = crate::spectral::sobolev(&self.coeffs[a], &self.space, k as f64);
                full2 += sk * sk;
            }
        }
        let mut report = NormReport::default();
        report.insert("besov_neg_3_2", besov2.sqrt());
        report.insert("sobolev_hn", hn2.sqrt());
        report.insert("h_n_inhomogeneous", full2.sqrt());
        report.insert("total", besov2.sqrt() + hn2.sqrt());
        report
    }

    /// Sup over one period (sampled) of the modulated norm total.
    pub fn periodic_norm_sup(&self, n_order: usize, time_samples: usize) -> f64 {
        let base = self.norm_report(n_order).get("total").unwrap_or(0.0);
        match self.period {
            None => base,
            Some(period) => {
                let mut sup = 0.0f64;
                for i in 0..time_samples {
                    let t = period * i as f64 / time_samples as f64;
                    sup = sup.max(self.modulation_at_time(t).abs() * base);
                }
                sup
            }
        }
    }
}

/// Closed-form windowed rotational field value in centered coordinates.
pub fn rotational_value(epsilon: f64, m: f64, x: [f64; 3], box_length: f64) -> [f64; 3] {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let bracket = (1.0 + r2).powf(-m);
    let w = radial_window(r2.sqrt(), box_length);
    [
        -epsilon * x[1] * bracket * w,
        epsilon * x[0] * bracket * w,
        0.0,
    ]
}

/// Analytic curl of the rotational field inside the flat window region.
pub fn rotational_curl_inner(epsilon: f64, m: f64, x: [f64; 3]) -> [f64; 3] {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let b = (1.0 + r2).powf(-(m + 1.0));
    [
        2.0 * epsilon * m * x[0] * x[2] * b,
        2.0 * epsilon * m * x[1] * x[2] * b,
        2.0 * epsilon * (1.0 + r2 - m * (x[0] * x[0] + x[1] * x[1])) * b,
    ]
}

/// Smooth radial window: 1 inside 80 percent of the inscribed sphere,
/// 0 beyond 95 percent.
pub fn radial_window(r: f64, box_length: f64) -> f64 {
    let r_in = 0.40 * box_length;
    let r_out = 0.475 * box_length;
    if r <= r_in {
        1.0
    } else if r >= r_out {
        0.0
    } else {
        let s = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
        let t = (r - r_in) / (r_out - r_in);
        s(1.0 - t) / (s(t) + s(1.0 - t))
    }
}
